#include "evarkit/ripr.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evar {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMassFloor = 1e-300;

double kl_of_mix(const Eigen::VectorXd& t, const Eigen::VectorXd& log_t,
                 const Eigen::VectorXd& m) {
    // log(t/m) as log1p((t-m)/m) when t ~ m: the direct difference of logs
    // would drown the objective in rounding noise near the optimum
    double acc = 0.0;
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        if (t(j) <= 0.0) continue;
        const double mj = std::max(m(j), kMassFloor);
        const double diff = t(j) - mj;
        acc += t(j) * (std::abs(diff) < 0.5 * mj ? std::log1p(diff / mj)
                                                 : log_t(j) - std::log(mj));
    }
    return acc;
}
}  // namespace

void DiscretePrior::validate() const {
    if (atoms.size() != weights.size())
        throw domain_error("DiscretePrior: atom/weight size mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw domain_error("DiscretePrior: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw domain_error("DiscretePrior: weights do not sum to one");
}

double kl_to_mixture(const Eigen::VectorXd& target_log_mass,
                     const Eigen::MatrixXd& comp_log_mass,
                     const Eigen::VectorXd& weights) {
    const Eigen::Index m = target_log_mass.size();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        if (target_log_mass(j) == kNegInf) continue;
        double log_m = kNegInf;
        for (Eigen::Index k = 0; k < weights.size(); ++k) {
            if (weights(k) <= 0.0 || comp_log_mass(k, j) == kNegInf) continue;
            log_m = logsumexp2(log_m, std::log(weights(k)) + comp_log_mass(k, j));
        }
        if (log_m == kNegInf) return std::numeric_limits<double>::infinity();
        acc += std::exp(target_log_mass(j)) * (target_log_mass(j) - log_m);
    }
    return acc;
}

MixtureSolution solve_mixture_kl(const Eigen::VectorXd& target_log_mass,
                                 const Eigen::MatrixXd& comp_log_mass,
                                 const SolverOptions& opts) {
    const Eigen::Index m = target_log_mass.size();
    const Eigen::Index K = comp_log_mass.rows();
    if (comp_log_mass.cols() != m)
        throw domain_error("solve_mixture_kl: support size mismatch");

    // Trim support points whose target mass cannot matter, then require
    // dominance: every component positive wherever the target is.
    Eigen::VectorXd t = Eigen::VectorXd::Zero(m), log_t(m);
    double max_log = kNegInf;
    for (Eigen::Index j = 0; j < m; ++j) max_log = std::max(max_log, target_log_mass(j));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < m; ++j)
        if (target_log_mass(j) > max_log + std::log(1e-17)) keep.push_back(j);
    if (keep.empty()) throw domain_error("solve_mixture_kl: empty target");

    const auto ms = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXd ts(ms), log_ts(ms);
    Eigen::MatrixXd C(K, ms);
    for (Eigen::Index jj = 0; jj < ms; ++jj) {
        const Eigen::Index j = keep[jj];
        log_ts(jj) = target_log_mass(j);
        for (Eigen::Index k = 0; k < K; ++k) {
            if (comp_log_mass(k, j) == kNegInf)
                throw domain_error(
                    "solve_mixture_kl: target support not dominated by every component");
            C(k, jj) = std::exp(comp_log_mass(k, j));
        }
    }
    double tot = 0.0;
    for (Eigen::Index jj = 0; jj < ms; ++jj) tot += std::exp(log_ts(jj));
    const double log_tot = std::log(tot);
    for (Eigen::Index jj = 0; jj < ms; ++jj) {
        log_ts(jj) -= log_tot;
        ts(jj) = std::exp(log_ts(jj));
    }

    // start at the single best atom
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    {
        Eigen::Index best = 0;
        double best_kl = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k) {
            const double kl = kl_of_mix(ts, log_ts, C.row(k).transpose());
            if (kl < best_kl) {
                best_kl = kl;
                best = k;
            }
        }
        w(best) = 1.0;
    }

    Eigen::VectorXd mix = C.transpose() * w;
    double kl = kl_of_mix(ts, log_ts, mix);
    RiprCertificate cert;
    cert.tol = opts.tol;

    Eigen::VectorXd ratio(ms), scores(K);
    auto refresh_scores = [&]() {
        for (Eigen::Index jj = 0; jj < ms; ++jj)
            ratio(jj) = ts(jj) / std::max(mix(jj), kMassFloor);
        scores = C * ratio;  // scores_k = E_target[c_k / m_w]
    };
    auto em_image = [&](const Eigen::VectorXd& from) {
        // multiplicative sweep w_k <- w_k * E_target[c_k/m_w], monotone in KL
        Eigen::VectorXd m = C.transpose() * from;
        Eigen::VectorXd r(ms);
        for (Eigen::Index jj = 0; jj < ms; ++jj)
            r(jj) = ts(jj) / std::max(m(jj), kMassFloor);
        Eigen::VectorXd next = from.cwiseProduct(C * r);
        next /= next.sum();
        return next;
    };
    double cur_gap = std::numeric_limits<double>::infinity();
    auto gap_of_mix = [&](const Eigen::VectorXd& m) {
        Eigen::VectorXd r(ms);
        for (Eigen::Index jj = 0; jj < ms; ++jj)
            r(jj) = ts(jj) / std::max(m(jj), kMassFloor);
        return (C * r).maxCoeff() - 1.0;
    };
    auto try_weights = [&](const Eigen::VectorXd& cand) {
        Eigen::VectorXd mix_new = C.transpose() * cand;
        const double kl_new = kl_of_mix(ts, log_ts, mix_new);
        bool take = kl_new < kl;
        if (!take && kl_new <= kl + 1e-14 * std::max(1.0, std::abs(kl))) {
            // objective already at floating-point resolution: accept moves
            // that strictly shrink the certificate instead
            const double gap_new = gap_of_mix(mix_new);
            take = gap_new < 0.999 * cur_gap;
            if (take) cur_gap = gap_new;
        }
        if (!take) return false;
        cert.max_objective_increase =
            std::max(cert.max_objective_increase, kl_new - kl);
        w = cand;
        mix = std::move(mix_new);
        kl = kl_new;
        return true;
    };
    auto em_burst = [&]() {
        // small support cells: sweeps cost almost nothing, so run the plain
        // multiplicative iteration in bulk with squared-iterate boosts
        Eigen::VectorXd cur = w;
        bool any = false;
        for (int s = 0; s < 800; ++s) {
            Eigen::VectorXd w1 = em_image(cur);
            Eigen::VectorXd w2 = em_image(w1);
            const Eigen::VectorXd r = w1 - cur;
            const Eigen::VectorXd v = (w2 - w1) - r;
            const double vn = v.norm();
            if (vn > 0.0) {
                const double alpha = -r.norm() / vn;
                Eigen::VectorXd cand = cur - 2.0 * alpha * r + (alpha * alpha) * v;
                for (Eigen::Index k = 0; k < cand.size(); ++k)
                    cand(k) = std::max(cand(k), 0.0);
                const double total = cand.sum();
                if (total > 0.0) {
                    cand /= total;
                    cand = em_image(cand);
                    const double kl_sq =
                        kl_of_mix(ts, log_ts, C.transpose() * cand);
                    const double kl_w2 = kl_of_mix(ts, log_ts, C.transpose() * w2);
                    w2 = kl_sq < kl_w2 ? std::move(cand) : std::move(w2);
                }
            }
            cur = std::move(w2);
            if ((s + 1) % 100 == 0 && try_weights(cur)) any = true;
        }
        if (try_weights(cur)) any = true;
        return any;
    };

    auto em_polish = [&]() {
        if (ms <= 64 && em_burst()) return true;
        // two multiplicative sweeps plus a squared-iterate extrapolation;
        // every candidate is accepted only if it lowers the objective
        const Eigen::VectorXd w1 = em_image(w);
        const Eigen::VectorXd w2 = em_image(w1);
        const Eigen::VectorXd r = w1 - w;
        const Eigen::VectorXd v = (w2 - w1) - r;
        const double vn = v.norm();
        bool any = false;
        if (vn > 0.0) {
            const double alpha = -r.norm() / vn;
            Eigen::VectorXd cand = w - 2.0 * alpha * r + (alpha * alpha) * v;
            for (Eigen::Index k = 0; k < cand.size(); ++k)
                cand(k) = std::max(cand(k), 0.0);
            const double total = cand.sum();
            if (total > 0.0) {
                cand /= total;
                any = try_weights(em_image(cand));
            }
        }
        if (!any) any = try_weights(w2);
        return any;
    };

    auto newton_polish = [&]() {
        // Active-set Newton over the current support: directions restricted
        // to sum to zero, backtracked to stay in the simplex. This is what
        // actually closes the last decades of the gap on deconvolution-like
        // geometries where multiplicative updates crawl.
        bool any = false;
        for (int step = 0; step < 4; ++step) {
            Eigen::VectorXd ratio_v(ms), r2(ms);
            for (Eigen::Index jj = 0; jj < ms; ++jj) {
                const double mj = std::max(mix(jj), kMassFloor);
                ratio_v(jj) = ts(jj) / mj;
                r2(jj) = ratio_v(jj) / mj;
            }
            // support = carried atoms plus the strongest gap violators, so a
            // single Newton step can hand mass to atoms the vertex steps
            // can no longer reach at floating-point resolution
            std::vector<Eigen::Index> sup;
            std::vector<char> in_sup(static_cast<std::size_t>(K), 0);
            for (Eigen::Index k = 0; k < K; ++k)
                if (w(k) > 1e-12) {
                    sup.push_back(k);
                    in_sup[static_cast<std::size_t>(k)] = 1;
                }
            if (sup.size() > 600) {
                // keep the heaviest atoms; the rest stay frozen this pass
                std::sort(sup.begin(), sup.end(),
                          [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
                for (std::size_t i = 600; i < sup.size(); ++i)
                    in_sup[static_cast<std::size_t>(sup[i])] = 0;
                sup.resize(600);
            }
            const Eigen::VectorXd sc = C * ratio_v;
            std::vector<Eigen::Index> outside;
            for (Eigen::Index k = 0; k < K; ++k)
                if (!in_sup[static_cast<std::size_t>(k)] && sc(k) > 1.0)
                    outside.push_back(k);
            std::sort(outside.begin(), outside.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return sc(a) > sc(b); });
            for (std::size_t i = 0; i < outside.size() && i < 16; ++i)
                sup.push_back(outside[i]);
            std::sort(sup.begin(), sup.end());

            Eigen::VectorXd dw;
            for (int purge = 0; purge < 5; ++purge) {
                const auto S = static_cast<Eigen::Index>(sup.size());
                if (S < 2 || S > 3000) return any;
                Eigen::MatrixXd Cs(S, ms);
                for (Eigen::Index i = 0; i < S; ++i) Cs.row(i) = C.row(sup[i]);
                const Eigen::VectorXd g = -(Cs * ratio_v);
                Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(S + 1, S + 1);
                kkt.topLeftCorner(S, S) = Cs * r2.asDiagonal() * Cs.transpose();
                const double ridge = 1e-12 * kkt.topLeftCorner(S, S).trace() / S;
                kkt.topLeftCorner(S, S).diagonal().array() += ridge;
                kkt.topRightCorner(S, 1).setOnes();
                kkt.bottomLeftCorner(1, S).setOnes();
                Eigen::VectorXd rhs(S + 1);
                rhs.head(S) = -g;
                rhs(S) = 0.0;
                dw = kkt.ldlt().solve(rhs).head(S);
                if (!dw.allFinite()) return any;
                // drop (near-)zero-weight atoms pushed negative, then re-solve
                std::vector<Eigen::Index> kept;
                for (Eigen::Index i = 0; i < S; ++i)
                    if (w(sup[i]) > 1e-9 || dw(i) > 0.0)
                        kept.push_back(sup[static_cast<std::size_t>(i)]);
                if (kept.size() == sup.size()) break;
                sup = std::move(kept);
                dw.resize(0);
            }
            if (dw.size() == 0) return any;
            const auto S = static_cast<Eigen::Index>(sup.size());
            if (dw.cwiseAbs().maxCoeff() == 0.0) return any;
            // exact line search along the Newton direction: f is convex in
            // the step, and the weight clamp would distort the direction, so
            // search up to the simplex/positivity boundary instead
            double alpha_hi = 1.0;
            for (Eigen::Index i = 0; i < S; ++i)
                if (dw(i) < 0.0)
                    alpha_hi = std::min(alpha_hi, -w(sup[i]) / dw(i));
            alpha_hi *= 0.999999;
            if (alpha_hi <= 0.0) return any;
            Eigen::VectorXd dm = Eigen::VectorXd::Zero(ms);
            for (Eigen::Index i = 0; i < S; ++i) dm += dw(i) * C.row(sup[i]).transpose();
            auto f_alpha = [&](double a) {
                return kl_of_mix(ts, log_ts, mix + a * dm);
            };
            double lo_a = 0.0, hi_a = alpha_hi;
            for (int s = 0; s < 70; ++s) {
                const double g1 = lo_a + (hi_a - lo_a) / 3.0;
                const double g2 = hi_a - (hi_a - lo_a) / 3.0;
                if (f_alpha(g1) < f_alpha(g2)) hi_a = g2; else lo_a = g1;
            }
            const double alpha = 0.5 * (lo_a + hi_a);
            const double kl_before = kl;
            Eigen::VectorXd cand = w;
            for (Eigen::Index i = 0; i < S; ++i)
                cand(sup[i]) = std::max(w(sup[i]) + alpha * dw(i), 0.0);
            cand /= cand.sum();
            const bool improved = try_weights(cand);
            if (std::getenv("EVARKIT_SOLVER_TRACE"))
                std::fprintf(stderr,
                             "  [newton] S=%ld alpha=%.2e kl %.3e -> %.3e ok=%d\n",
                             static_cast<long>(S), alpha, kl_before, kl, improved);
            if (!improved) return any;
            any = true;
        }
        return any;
    };

    auto nnls_polish = [&]() {
        // Lawson-Hanson nonnegative least squares on the relative residual:
        // min || C^T x / t - 1 ||^2, x >= 0. Near a representable target this
        // is second-order equivalent to the KL, its active-set exchange
        // handles the near-collinear atom columns that defeat multiplicative
        // updates and support Newton steps, and the per-cell relative
        // weighting keeps tail cells from capping the reachable duality gap.
        const Eigen::VectorXd inv_sqrt_t = ts.cwiseInverse();
        const Eigen::VectorXd b = Eigen::VectorXd::Ones(ms);
        std::vector<Eigen::Index> passive;
        Eigen::VectorXd x(0);                   // feasible coefficients, passive set
        Eigen::MatrixXd cols(ms, 0);            // weighted columns
        Eigen::VectorXd resid = b;
        Eigen::VectorXd col_norm(K);
        for (Eigen::Index k = 0; k < K; ++k)
            col_norm(k) = C.row(k).transpose().cwiseProduct(inv_sqrt_t).norm();

        auto drop_atom = [&](Eigen::Index i) {
            const auto last = static_cast<Eigen::Index>(passive.size()) - 1;
            passive[static_cast<std::size_t>(i)] = passive[static_cast<std::size_t>(last)];
            passive.pop_back();
            cols.col(i) = cols.col(last);
            cols.conservativeResize(Eigen::NoChange, last);
            x(i) = x(last);
            x.conservativeResize(last);
        };
        // column-pivoted QR on the raw columns: the normal equations would
        // square the (already poor) conditioning of near-duplicate atoms
        auto ls_solve = [&]() {
            return Eigen::VectorXd(cols.colPivHouseholderQr().solve(b));
        };

        const int max_outer = 400;
        for (int outer = 0; outer < max_outer; ++outer) {
            // angle-based atom selection and stopping: raw correlations would
            // be dominated by whichever column happens to have a huge norm
            Eigen::VectorXd corr =
                (C * resid.cwiseProduct(inv_sqrt_t)).cwiseQuotient(col_norm);
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(passive.size()); ++i)
                corr(passive[static_cast<std::size_t>(i)]) = 0.0;
            Eigen::Index cand;
            const double cmax = corr.maxCoeff(&cand);
            if (cmax <= 1e-14 * std::max(resid.norm(), 1e-30)) break;
            // grow the passive set; the new atom enters at coefficient zero
            const Eigen::VectorXd new_col =
                C.row(cand).transpose().cwiseProduct(inv_sqrt_t);
            const auto P = static_cast<Eigen::Index>(passive.size());
            cols.conservativeResize(Eigen::NoChange, P + 1);
            cols.col(P) = new_col;
            passive.push_back(cand);
            x.conservativeResize(P + 1);
            x(P) = 0.0;

            // Lawson-Hanson inner loop: move toward the unconstrained LS
            // point, clipping at zero crossings so the objective strictly
            // decreases and add/remove cycling cannot occur
            for (int inner = 0; inner < 200; ++inner) {
                const Eigen::VectorXd sol = ls_solve();
                double min_sol = sol.size() ? sol.minCoeff() : 1.0;
                if (min_sol > 0.0) {
                    x = sol;
                    break;
                }
                double alpha = 1.0;
                for (Eigen::Index i = 0; i < sol.size(); ++i)
                    if (sol(i) <= 0.0 && x(i) > sol(i))
                        alpha = std::min(alpha, x(i) / (x(i) - sol(i)));
                x += alpha * (sol - x);
                for (Eigen::Index i = static_cast<Eigen::Index>(passive.size()) - 1;
                     i >= 0; --i)
                    if (x(i) <= 1e-300) drop_atom(i);
                if (passive.empty()) return false;
            }
            resid = b - cols * x;
            if (resid.squaredNorm() < 1e-30) break;
        }
        if (x.size() == 0) return false;
        Eigen::VectorXd cand = Eigen::VectorXd::Zero(K);
        for (std::size_t i = 0; i < passive.size(); ++i)
            cand(passive[i]) = std::max(x(static_cast<Eigen::Index>(i)), 0.0);
        const double total = cand.sum();
        if (total <= 0.0) return false;
        cand /= total;
        // gate on both criteria: the exchange may zero out tail cells in a
        // way that helps the chi^2 objective but wrecks the duality gap
        Eigen::VectorXd cand_mix = C.transpose() * cand;
        const double cand_kl = kl_of_mix(ts, log_ts, cand_mix);
        bool ok = cand_kl < kl;
        if (ok) {
            Eigen::VectorXd r2v(ms);
            for (Eigen::Index jj = 0; jj < ms; ++jj)
                r2v(jj) = ts(jj) / std::max(cand_mix(jj), kMassFloor);
            const double cand_gap = (C * r2v).maxCoeff() - 1.0;
            ok = cand_gap <= std::max(cert.gap, opts.tol);
            if (ok) {
                w = cand;
                mix = std::move(cand_mix);
                kl = cand_kl;
            }
        }
        if (std::getenv("EVARKIT_SOLVER_TRACE"))
            std::fprintf(stderr, "  [nnls] passive=%zu resid2=%.3e ok=%d kl=%.3e\n",
                         passive.size(), resid.squaredNorm(), ok, kl);
        return ok;
    };

    const bool trace = std::getenv("EVARKIT_SOLVER_TRACE") != nullptr;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        refresh_scores();
        Eigen::Index best_k;
        const double gap = scores.maxCoeff(&best_k) - 1.0;
        cert.gap = std::max(gap, 0.0);
        cur_gap = cert.gap;
        if (trace && it % 10 == 0)
            std::fprintf(stderr, "[solver] it=%d kl=%.3e gap=%.3e\n", it, kl, cert.gap);
        if (cert.gap <= opts.tol) {
            cert.converged = true;
            break;
        }

        // vertex (Frank-Wolfe) step with exact ternary line search: the only
        // move that introduces atoms outside the current support
        const Eigen::VectorXd cb = C.row(best_k).transpose();
        auto f = [&](double g) {
            return kl_of_mix(ts, log_ts, (1.0 - g) * mix + g * cb);
        };
        double lo = 0.0, hi = 1.0;
        for (int s = 0; s < 70; ++s) {
            const double g1 = lo + (hi - lo) / 3.0, g2 = hi - (hi - lo) / 3.0;
            if (f(g1) < f(g2)) hi = g2; else lo = g1;
        }
        const double gamma = 0.5 * (lo + hi);
        const double kl_new = f(gamma);
        bool moved = false;
        if (kl_new < kl && gamma > 0.0) {
            w *= (1.0 - gamma);
            w(best_k) += gamma;
            mix = (1.0 - gamma) * mix + gamma * cb;
            kl = kl_new;
            moved = true;
        }
        // one early NNLS active-set exchange: on representable targets it
        // lands at once where the first-order moves crawl
        if (it == 1) moved |= nnls_polish();
        if (opts.em_every > 0 && (it + 1) % opts.em_every == 0) {
            moved |= em_polish();
            if ((it + 1) % (5 * opts.em_every) == 0) moved |= newton_polish();
        }
        // stop only when no move helps: vertex step, multiplicative sweep,
        // support Newton, and finally the NNLS exchange
        if (!moved && !em_polish() && !newton_polish() && !nnls_polish()) break;
    }
    cert.iterations = it;
    cert.kl = kl;

    // prune tiny weights and renormalize
    for (Eigen::Index k = 0; k < K; ++k)
        if (w(k) < opts.prune_below) w(k) = 0.0;
    w /= w.sum();
    return {std::move(w), cert};
}

namespace {

Eigen::VectorXd discretize(const ZLaw& law, bool lattice, double offset,
                           Eigen::Index count, const std::vector<double>& grid) {
    Eigen::VectorXd out(count);
    if (lattice) {
        for (Eigen::Index j = 0; j < count; ++j)
            out(j) = law.log_density(offset + static_cast<double>(j));
        return out;
    }
    // cell masses around each grid node by 4-point Gauss-Legendre in log
    // space; low-order quadrature here would leave per-component wiggles
    // that put a floor under the reachable duality gap
    static const double gl_x[2] = {0.3399810435848563, 0.8611363115940526};
    static const double gl_w[2] = {0.6521451548625461, 0.3478548451374538};
    auto log_density = [&](double z) {
        if (law.hard_bounds() && (z < law.lo() || z > law.hi())) return kNegInf;
        return law.log_density(z);
    };
    std::vector<double> lm(grid.size(), kNegInf);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double a = j > 0 ? 0.5 * (grid[j - 1] + grid[j]) : grid[j];
        const double b = j + 1 < grid.size() ? 0.5 * (grid[j] + grid[j + 1]) : grid[j];
        if (b <= a) continue;
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double acc = kNegInf;
        for (int g = 0; g < 2; ++g) {
            const double lw = std::log(h * gl_w[g]);
            acc = logsumexp2(acc, lw + log_density(c - h * gl_x[g]));
            acc = logsumexp2(acc, lw + log_density(c + h * gl_x[g]));
        }
        lm[j] = acc;
    }
    const double total = logsumexp(lm);
    for (Eigen::Index j = 0; j < count; ++j) out(j) = lm[j] - total;
    return out;
}

}  // namespace

ZRiprProblem make_z_ripr_problem(const ZLaw& target,
                                 const std::function<ZLaw(const MeanVec&)>& component_map,
                                 const std::vector<MeanVec>& mu_grid,
                                 const std::vector<double>& quad_grid) {
    if (mu_grid.empty()) throw domain_error("ripr: empty atom grid");
    ZRiprProblem prob;
    prob.atom_grid = mu_grid;
    prob.lattice = target.is_lattice();
    if (prob.lattice) {
        prob.offset = target.offset();
        prob.step = target.step();
        const auto count = static_cast<Eigen::Index>(target.log_mass().size());
        prob.target_log_mass = Eigen::VectorXd(count);
        for (Eigen::Index j = 0; j < count; ++j)
            prob.target_log_mass(j) = target.log_mass()[static_cast<std::size_t>(j)];
        prob.comp_log_mass.resize(static_cast<Eigen::Index>(mu_grid.size()), count);
        for (std::size_t k = 0; k < mu_grid.size(); ++k) {
            const ZLaw comp = component_map(mu_grid[k]);
            if (!comp.is_lattice() || comp.step() != target.step())
                throw domain_error("ripr: component lattice incompatible with target");
            for (Eigen::Index j = 0; j < count; ++j) {
                const double z = prob.offset + static_cast<double>(j) * prob.step;
                const double idx = (z - comp.offset()) / comp.step();
                const long ki = std::lround(idx);
                prob.comp_log_mass(static_cast<Eigen::Index>(k), j) =
                    (ki >= 0 && ki < static_cast<long>(comp.log_mass().size()))
                        ? comp.log_mass()[static_cast<std::size_t>(ki)]
                        : kNegInf;
            }
        }
        return prob;
    }
    if (quad_grid.size() < 2)
        throw domain_error("ripr: continuous target needs a quadrature grid");
    prob.grid = quad_grid;
    const auto count = static_cast<Eigen::Index>(quad_grid.size());
    prob.target_log_mass = discretize(target, false, 0, count, quad_grid);
    prob.comp_log_mass.resize(static_cast<Eigen::Index>(mu_grid.size()), count);
    for (std::size_t k = 0; k < mu_grid.size(); ++k) {
        const ZLaw comp = component_map(mu_grid[k]);
        prob.comp_log_mass.row(static_cast<Eigen::Index>(k)) =
            discretize(comp, false, 0, count, quad_grid).transpose();
    }
    return prob;
}

ZRiprResult solve_ripr_z(const ZLaw& target,
                         const std::function<ZLaw(const MeanVec&)>& component_map,
                         const std::vector<MeanVec>& mu_grid,
                         const SolverOptions& opts,
                         const std::vector<double>& quad_grid) {
    const ZRiprProblem prob = make_z_ripr_problem(target, component_map, mu_grid, quad_grid);
    MixtureSolution sol = solve_mixture_kl(prob.target_log_mass, prob.comp_log_mass, opts);
    ZRiprResult out;
    out.cert = sol.cert;
    out.full_weights = sol.weights;
    for (Eigen::Index k = 0; k < sol.weights.size(); ++k) {
        if (sol.weights(k) <= 0.0) continue;
        out.prior.atoms.push_back(mu_grid[static_cast<std::size_t>(k)]);
        out.prior.weights.push_back(sol.weights(k));
    }
    return out;
}

ZRiprResult local_ripr(const ZLaw& q_law,
                       const std::function<ZLaw(const MeanVec&)>& component_map,
                       const std::vector<MeanVec>& mu_grid,
                       const SolverOptions& opts,
                       const std::vector<double>& quad_grid) {
    return solve_ripr_z(q_law, component_map, mu_grid, opts, quad_grid);
}

std::vector<MeanVec> linear_atom_grid(double lo, double hi, int count) {
    std::vector<MeanVec> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        MeanVec mu(1);
        mu(0) = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (count - 1);
        grid.push_back(mu);
    }
    return grid;
}

}  // namespace evar
