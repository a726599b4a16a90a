#include "protocell/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "protocell/errors.hpp"
#include "protocell/io.hpp"

namespace protocell {

int effective_workers(int requested, std::size_t points) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    long long w = requested > 0 ? requested : static_cast<long long>(hw);
    w = std::min<long long>(w, static_cast<long long>(std::max<std::size_t>(points, 1)));
    return static_cast<int>(std::max<long long>(w, 1));
}

ResponseTable parametric_sweep(const ModelConfig& config, const std::vector<double>& k1_set,
                               const std::vector<double>& k2_set, const std::vector<double>& q_set,
                               int workers, const ProgressLog& log) {
    if (k1_set.empty()) throw ValidationError("sweep.k1", "set is empty");
    if (k2_set.empty()) throw ValidationError("sweep.k2", "set is empty");
    if (q_set.empty()) throw ValidationError("sweep.Q_ccm", "set is empty");

    struct Point {
        double k1, k2, q;
    };
    std::vector<Point> points;
    for (double k1 : k1_set)
        for (double k2 : k2_set)
            for (double q : q_set) points.push_back({k1, k2, q});

    ModelConfig base_cfg = config;
    base_cfg.q_ccm = q_set;
    std::sort(base_cfg.q_ccm.begin(), base_cfg.q_ccm.end());
    base_cfg.q_ccm.erase(std::unique(base_cfg.q_ccm.begin(), base_cfg.q_ccm.end()),
                         base_cfg.q_ccm.end());
    Model primary(base_cfg);
    for (double q : base_cfg.q_ccm) primary.base_flow(q);

    const int n_workers = effective_workers(workers, points.size());
    ResponseTable table(points.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto kinetics_for = [&](const Point& p) {
        KineticsParams k = config.kinetics;
        if (config.formulation == Formulation::Alpha) {
            k.k_app = p.k1;
        } else {
            k.k1 = p.k1;
            k.k2 = p.k2;
        }
        return k;
    };

    auto run = [&](Model& model) {
        for (std::size_t n = next++; n < points.size(); n = next++) {
            const Point& p = points[n];
            const KineticsParams k = kinetics_for(p);
            ResponseRecord rec;
            try {
                rec = scalar_responses(model.solve(p.q, k));
            } catch (const Error& e) {
                rec = failed_record(config.formulation, p.q, k, config.sigma, e.what());
            }
            table[n] = rec;
            if (log) {
                std::lock_guard lock(log_mutex);
                log("point " + std::to_string(n + 1) + "/" + std::to_string(points.size()) +
                    " k1=" + format_number(p.k1) + " k2=" + format_number(p.k2) +
                    " Q=" + format_number(p.q) + " outer=" + std::to_string(rec.outer_iterations) +
                    " converged=" + (rec.converged ? "1" : "0") +
                    (rec.error.empty() ? "" : " error=" + rec.error));
            }
        }
    };

    if (n_workers == 1) {
        run(primary);
        return table;
    }
    std::vector<Model> models;
    for (int w = 0; w < n_workers; ++w) {
        Model m(base_cfg, primary.mesh_ptr());
        for (double q : base_cfg.q_ccm) m.set_base_flow(q, primary.base_flow(q));
        models.push_back(std::move(m));
    }
    std::vector<std::thread> threads;
    for (auto& m : models) threads.emplace_back([&run, &m] { run(m); });
    for (auto& t : threads) t.join();
    return table;
}

}  // namespace protocell
