#include "dfsim/sim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfsim/common/error.hpp"
#include "dfsim/sim/physics.hpp"

namespace dfsim::sim {

namespace {

constexpr std::size_t kTile = 8;

const char* component_name(int k) {
    static constexpr const char* names[] = {"h", "u", "v", "C", "z_b"};
    return names[k];
}

}  // namespace

MacCormackSolver::MacCormackSolver(const grid::GridHeader& header, const SimParams& params,
                                   std::optional<grid::Raster> bedrock)
    : header_(header), params_(params), medium_(effective_medium(params)), bedrock_(std::move(bedrock)) {
    header_.validate();
    params_.validate();
    if (bedrock_) grid::require_same_geometry(header_, bedrock_->header(), "bedrock");
    const std::size_t n = header_.size();
    const std::size_t nfx = header_.rows * (header_.cols + 1);
    const std::size_t nfy = (header_.rows + 1) * header_.cols;
    for (auto* v : {&q_, &r_, &m_, &eta_, &zb_, &hs_, &qs_, &rs_, &etas_, &dq0_, &dr0_, &dq1_, &dr1_, &sx_,
                    &sy_, &out_, &scale_}) {
        v->assign(n, 0.0);
    }
    for (auto* v : {&fx0_, &fx1_, &tx_, &vx_, &axq_, &axr_, &wx_}) v->assign(nfx, 0.0);
    for (auto* v : {&fy0_, &fy1_, &ty_, &vy_, &ayq_, &ayr_, &wy_}) v->assign(nfy, 0.0);
    active_.assign(n, 0);
}

bool MacCormackSolver::update_region(const FlowState& state) {
    const std::size_t rows = header_.rows, cols = header_.cols;
    const std::size_t trows = (rows + kTile - 1) / kTile, tcols = (cols + kTile - 1) / kTile;
    std::vector<std::uint8_t> wet(trows * tcols, 0);
    bool any = false;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* h = &state.h(r, 0);
        std::uint8_t* trow = &wet[(r / kTile) * tcols];
        for (std::size_t c = 0; c < cols; ++c) {
            if (h[c] > 0.0) {
                trow[c / kTile] = 1;
                any = true;
            }
        }
    }
    if (!any) return false;

    tiles_.assign(trows * tcols, 0);
    for (std::size_t tr = 0; tr < trows; ++tr) {
        for (std::size_t tc = 0; tc < tcols; ++tc) {
            if (!wet[tr * tcols + tc]) continue;
            const std::size_t r0 = tr > 0 ? tr - 1 : 0, r1 = std::min(trows - 1, tr + 1);
            const std::size_t c0 = tc > 0 ? tc - 1 : 0, c1 = std::min(tcols - 1, tc + 1);
            for (std::size_t a = r0; a <= r1; ++a) {
                for (std::size_t b = c0; b <= c1; ++b) tiles_[a * tcols + b] = 1;
            }
        }
    }
    std::fill(active_.begin(), active_.end(), 0);
    spans_.clear();
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint8_t* trow = &tiles_[(r / kTile) * tcols];
        for (std::size_t tc = 0; tc < tcols;) {
            if (!trow[tc]) {
                ++tc;
                continue;
            }
            std::size_t end = tc;
            while (end + 1 < tcols && trow[end + 1]) ++end;
            const Span sp{r, tc * kTile, std::min(cols - 1, end * kTile + kTile - 1)};
            spans_.push_back(sp);
            std::fill(active_.begin() + static_cast<std::ptrdiff_t>(r * cols + sp.c0),
                      active_.begin() + static_cast<std::ptrdiff_t>(r * cols + sp.c1 + 1), 1);
            tc = end + 1;
        }
    }
    return true;
}

template <typename F>
void MacCormackSolver::for_cells(F&& fn) const {
    const std::size_t cols = header_.cols;
    for (const Span& sp : spans_) {
        for (std::size_t c = sp.c0; c <= sp.c1; ++c) fn(sp.row, c, sp.row * cols + c);
    }
}

// fn(row, k, face, edge): x face k lies between columns k-1 and k. `edge` is
// set on faces whose other side is inactive (inside the grid).
template <typename F>
void MacCormackSolver::for_xfaces(F&& fn) const {
    const std::size_t cols = header_.cols, nf = cols + 1;
    for (const Span& sp : spans_) {
        for (std::size_t k = sp.c0; k <= sp.c1 + 1; ++k) {
            const bool edge = (k == sp.c0 && k > 0) || (k == sp.c1 + 1 && k < cols);
            fn(sp.row, k, sp.row * nf + k, edge);
        }
    }
}

// fn(k, col, face, edge): y face k lies between rows k-1 and k.
template <typename F>
void MacCormackSolver::for_yfaces(F&& fn) const {
    const std::size_t rows = header_.rows, cols = header_.cols;
    for (const Span& sp : spans_) {
        const std::size_t r = sp.row;
        for (std::size_t c = sp.c0; c <= sp.c1; ++c) {
            const std::size_t i = r * cols + c;
            fn(r, c, r * cols + c, r > 0 && !active_[i - cols]);
            if (r + 1 == rows || !active_[i + cols]) fn(r + 1, c, (r + 1) * cols + c, r + 1 < rows);
        }
    }
}

double MacCormackSolver::wall_delta(std::size_t a, std::size_t b, const std::vector<double>& h,
                                    const std::vector<double>& eta, const std::vector<double>& zb) const {
    const bool wet_a = h[a] >= params_.h_min;
    const bool wet_b = h[b] >= params_.h_min;
    if (!wet_a && !wet_b) return 0.0;
    if (!wet_a && zb[a] >= eta[b]) return 0.0;
    if (!wet_b && zb[b] >= eta[a]) return 0.0;
    return eta[b] - eta[a];
}

// Rates of (h, uh, vh) with one-sided differences. The forward stage reads
// face values from the cell on the + side, the backward stage from the -
// side. Faces on the edge of the active region (but inside the grid) carry
// nothing: both neighbours are dry.
void MacCormackSolver::stage(const std::vector<double>& h, const std::vector<double>& q,
                             const std::vector<double>& r, const std::vector<double>& eta, bool forward,
                             std::vector<double>& fx, std::vector<double>& fy, std::vector<double>& dq,
                             std::vector<double>& dr) {
    const std::size_t rows = header_.rows, cols = header_.cols;
    const std::size_t nfx_cols = cols + 1;
    const double dx = header_.cellsize;
    const double g = params_.g;
    const double h_min = params_.h_min;
    const bool closed = params_.boundary == BoundaryMode::Closed;

    auto face_values = [&](std::size_t cell, double& mass, double& fq, double& fr, bool along_x) {
        const double hc = h[cell];
        if (hc < h_min) {
            mass = fq = fr = 0.0;
            return;
        }
        const double vel = (along_x ? q[cell] : r[cell]) / hc;
        mass = along_x ? q[cell] : r[cell];
        fq = vel * q[cell];
        fr = vel * r[cell];
    };

    for_xfaces([&](std::size_t rr, std::size_t k, std::size_t f, bool edge) {
        const bool grid_edge = k == 0 || k == cols;
        fx[f] = axq_[f] = axr_[f] = wx_[f] = 0.0;
        if (edge || (grid_edge && closed)) return;
        std::size_t col = forward ? k : k - 1;
        if (k == 0) col = 0;
        if (k == cols) col = cols - 1;
        face_values(rr * cols + col, fx[f], axq_[f], axr_[f], true);
        if (!grid_edge) {
            const std::size_t a = rr * cols + (k - 1), b = a + 1;
            wx_[f] = g * 0.5 * (h[a] + h[b]) * wall_delta(a, b, h, eta, zb_);
        }
    });
    for_yfaces([&](std::size_t k, std::size_t cc, std::size_t f, bool edge) {
        const bool grid_edge = k == 0 || k == rows;
        fy[f] = ayq_[f] = ayr_[f] = wy_[f] = 0.0;
        if (edge || (grid_edge && closed)) return;
        std::size_t row = forward ? k : k - 1;
        if (k == 0) row = 0;
        if (k == rows) row = rows - 1;
        face_values(row * cols + cc, fy[f], ayq_[f], ayr_[f], false);
        if (!grid_edge) {
            const std::size_t a = (k - 1) * cols + cc, b = k * cols + cc;
            wy_[f] = g * 0.5 * (h[a] + h[b]) * wall_delta(a, b, h, eta, zb_);
        }
    });

    const double eps = params_.eps_diff;
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const std::size_t fl = rr * nfx_cols + cc, fr_ = fl + 1;
        const std::size_t fu = rr * cols + cc, fd = fu + cols;
        double rate_q = -(axq_[fr_] - axq_[fl]) / dx - (ayq_[fd] - ayq_[fu]) / dx - (forward ? wx_[fr_] : wx_[fl]) / dx;
        double rate_r = -(axr_[fr_] - axr_[fl]) / dx - (ayr_[fd] - ayr_[fu]) / dx - (forward ? wy_[fd] : wy_[fu]) / dx;
        if (eps > 0.0) {
            const std::size_t w = cc > 0 && active_[i - 1] ? i - 1 : i;
            const std::size_t e = cc + 1 < cols && active_[i + 1] ? i + 1 : i;
            const std::size_t n = rr > 0 && active_[i - cols] ? i - cols : i;
            const std::size_t s = rr + 1 < rows && active_[i + cols] ? i + cols : i;
            rate_q += eps * (q[w] + q[e] + q[n] + q[s] - 4.0 * q[i]) / (dx * dx);
            rate_r += eps * (r[w] + r[e] + r[n] + r[s] - 4.0 * r[i]) / (dx * dx);
        }
        dq[i] = rate_q;
        dr[i] = rate_r;
    });
}

StepOutflow MacCormackSolver::step(FlowState& s, double dt, bool forward) {
    grid::require_same_geometry(header_, s.header(), "MacCormackSolver::step");
    if (!bedrock_) {
        grid::Raster floor = s.zb;
        for (double& z : floor.data()) z -= params_.bedrock_depth;
        bedrock_ = std::move(floor);
    }
    StepOutflow outflow;
    if (dt <= 0.0 || !update_region(s)) return outflow;

    const std::size_t cols = header_.cols, rows = header_.rows;
    const std::size_t nfx_cols = cols + 1;
    const double dx = header_.cellsize;
    const double area = dx * dx;
    const double h_min = params_.h_min;
    const double cstar = medium_.cstar;
    const bool closed = params_.boundary == BoundaryMode::Closed;
    std::vector<double>& h = s.h.data();

    for_cells([&](std::size_t, std::size_t, std::size_t i) {
        q_[i] = s.u[i] * h[i];
        r_[i] = s.v[i] * h[i];
        m_[i] = s.c[i] * h[i];
        zb_[i] = s.zb[i];
        eta_[i] = zb_[i] + h[i];
    });

    // predictor
    stage(h, q_, r_, eta_, forward, fx0_, fy0_, dq0_, dr0_);
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const std::size_t fl = rr * nfx_cols + cc, fu = rr * cols + cc;
        const double hp = h[i] - dt / dx * ((fx0_[fl + 1] - fx0_[fl]) + (fy0_[fu + cols] - fy0_[fu]));
        hs_[i] = std::max(hp, 0.0);
        if (hs_[i] < h_min) {
            qs_[i] = rs_[i] = 0.0;
        } else {
            qs_[i] = q_[i] + dt * dq0_[i];
            rs_[i] = r_[i] + dt * dr0_[i];
        }
        etas_[i] = zb_[i] + hs_[i];
    });

    // corrector
    stage(hs_, qs_, rs_, etas_, !forward, fx1_, fy1_, dq1_, dr1_);

    // face transfers in depth units (positive toward +col / +row), new momentum
    for_xfaces([&](std::size_t, std::size_t, std::size_t f, bool) {
        tx_[f] = 0.5 * dt / dx * (fx0_[f] + fx1_[f]);
        vx_[f] = 0.0;
    });
    for_yfaces([&](std::size_t, std::size_t, std::size_t f, bool) {
        ty_[f] = 0.5 * dt / dx * (fy0_[f] + fy1_[f]);
        vy_[f] = 0.0;
    });
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const std::size_t fl = rr * nfx_cols + cc, fu = rr * cols + cc;
        qs_[i] = q_[i] + 0.5 * dt * (dq0_[i] + dq1_[i]);
        rs_[i] = r_[i] + 0.5 * dt * (dr0_[i] + dr1_[i]);
        const double tentative = h[i] - (tx_[fl + 1] - tx_[fl]) - (ty_[fu + cols] - ty_[fu]);
        hs_[i] = std::max(tentative, 0.0);
        etas_[i] = zb_[i] + hs_[i];
    });

    // interior faces of the active region: both cells active
    auto interior_x = [&](std::size_t k, std::size_t i_b) { return k > 0 && k < cols && active_[i_b - 1] && active_[i_b]; };
    auto interior_y = [&](std::size_t k, std::size_t cc) {
        return k > 0 && k < rows && active_[(k - 1) * cols + cc] && active_[k * cols + cc];
    };

    // artificial viscosity, sensor-scaled
    const double kappa = params_.visc_kappa;
    if (kappa > 0.0) {
        auto sensor = [](double lo, double mid, double hi) {
            const double den = lo + 2.0 * mid + hi;
            return den > 0.0 ? std::abs(lo - 2.0 * mid + hi) / den : 0.0;
        };
        for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
            const std::size_t w = cc > 0 && active_[i - 1] ? i - 1 : i;
            const std::size_t e = cc + 1 < cols && active_[i + 1] ? i + 1 : i;
            const std::size_t n = rr > 0 && active_[i - cols] ? i - cols : i;
            const std::size_t so = rr + 1 < rows && active_[i + cols] ? i + cols : i;
            sx_[i] = sensor(hs_[w], hs_[i], hs_[e]);
            sy_[i] = sensor(hs_[n], hs_[i], hs_[so]);
        });
        for_xfaces([&](std::size_t rr, std::size_t k, std::size_t f, bool) {
            const std::size_t b = rr * cols + k;
            if (!interior_x(k, b)) return;
            const std::size_t a = b - 1;
            const double nu = kappa * std::max(sx_[a], sx_[b]);
            vx_[f] = nu;
            tx_[f] -= nu * wall_delta(a, b, hs_, etas_, zb_);
        });
        for_yfaces([&](std::size_t k, std::size_t cc, std::size_t f, bool) {
            if (!interior_y(k, cc)) return;
            const std::size_t a = (k - 1) * cols + cc, b = k * cols + cc;
            const double nu = kappa * std::max(sy_[a], sy_[b]);
            vy_[f] = nu;
            ty_[f] -= nu * wall_delta(a, b, hs_, etas_, zb_);
        });
    }

    // boundary faces: outflow only, or nothing when closed
    for_xfaces([&](std::size_t, std::size_t k, std::size_t f, bool) {
        if (k == 0) tx_[f] = closed ? 0.0 : std::min(tx_[f], 0.0);
        if (k == cols) tx_[f] = closed ? 0.0 : std::max(tx_[f], 0.0);
    });
    for_yfaces([&](std::size_t k, std::size_t, std::size_t f, bool) {
        if (k == 0) ty_[f] = closed ? 0.0 : std::min(ty_[f], 0.0);
        if (k == rows) ty_[f] = closed ? 0.0 : std::max(ty_[f], 0.0);
    });

    // positivity: scale each donor's outgoing transfers to its available depth
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const std::size_t fl = rr * nfx_cols + cc, fu = rr * cols + cc;
        const double out = std::max(tx_[fl + 1], 0.0) + std::max(-tx_[fl], 0.0) + std::max(ty_[fu + cols], 0.0) +
                           std::max(-ty_[fu], 0.0);
        out_[i] = out;
        scale_[i] = out > h[i] ? h[i] / out : 1.0;
    });

    // limited transfers; sediment moves at the donor concentration
    auto limit = [&](double& t, std::size_t minus_cell, std::size_t plus_cell, bool has_minus, bool has_plus,
                     double& sed) {
        if (t > 0.0 && has_minus) {
            t *= scale_[minus_cell];
            sed = t * s.c[minus_cell];
        } else if (t < 0.0 && has_plus) {
            t *= scale_[plus_cell];
            sed = t * s.c[plus_cell];
        } else {
            t = 0.0;
            sed = 0.0;
        }
    };
    // reuse fx0_/fy0_ for sediment transfers
    std::vector<double>& sedx = fx0_;
    std::vector<double>& sedy = fy0_;
    for_xfaces([&](std::size_t rr, std::size_t k, std::size_t f, bool) {
        const bool has_minus = k > 0, has_plus = k < cols;
        limit(tx_[f], has_minus ? rr * cols + k - 1 : 0, has_plus ? rr * cols + k : 0, has_minus, has_plus, sedx[f]);
        if (k == 0) {
            outflow.mixture -= tx_[f] * area;
            outflow.sediment -= sedx[f] * area;
        } else if (k == cols) {
            outflow.mixture += tx_[f] * area;
            outflow.sediment += sedx[f] * area;
        }
    });
    for_yfaces([&](std::size_t k, std::size_t cc, std::size_t f, bool) {
        const bool has_minus = k > 0, has_plus = k < rows;
        limit(ty_[f], has_minus ? (k - 1) * cols + cc : 0, has_plus ? k * cols + cc : 0, has_minus, has_plus,
              sedy[f]);
        if (k == 0) {
            outflow.mixture -= ty_[f] * area;
            outflow.sediment -= sedy[f] * area;
        } else if (k == rows) {
            outflow.mixture += ty_[f] * area;
            outflow.sediment += sedy[f] * area;
        }
    });

    // momentum smoothing of the post-corrector momentum
    if (kappa > 0.0) {
        std::vector<double>& gq = dq0_;
        std::vector<double>& gr = dr0_;
        for_cells([&](std::size_t, std::size_t, std::size_t i) { gq[i] = gr[i] = 0.0; });
        auto smooth = [&](double nu, std::size_t a, std::size_t b) {
            if (nu == 0.0) return;
            const double dqf = nu * (qs_[b] - qs_[a]), drf = nu * (rs_[b] - rs_[a]);
            gq[a] += dqf;
            gq[b] -= dqf;
            gr[a] += drf;
            gr[b] -= drf;
        };
        for_xfaces([&](std::size_t rr, std::size_t k, std::size_t f, bool) {
            const std::size_t b = rr * cols + k;
            if (interior_x(k, b)) smooth(vx_[f], b - 1, b);
        });
        for_yfaces([&](std::size_t k, std::size_t cc, std::size_t f, bool) {
            if (interior_y(k, cc)) smooth(vy_[f], (k - 1) * cols + cc, k * cols + cc);
        });
        for_cells([&](std::size_t, std::size_t, std::size_t i) {
            qs_[i] += gq[i];
            rs_[i] += gr[i];
        });
    }

    // conservative update of depth and suspended sediment
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const std::size_t fl = rr * nfx_cols + cc, fu = rr * cols + cc;
        const double hn = h[i] - (tx_[fl + 1] - tx_[fl]) - (ty_[fu + cols] - ty_[fu]);
        const double mn = m_[i] - (sedx[fl + 1] - sedx[fl]) - (sedy[fu + cols] - sedy[fu]);
        hs_[i] = std::max(hn, 0.0);
        m_[i] = std::max(mn, 0.0);
    });

    // point sources on wet cells
    const grid::Raster& floor = *bedrock_;
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        double hn = hs_[i];
        if (hn < h_min) return;
        double qn = qs_[i], rn = rs_[i];
        double conc = std::clamp(m_[i] / hn, 0.0, cstar);
        if (params_.friction) {
            const double k = friction_coefficient(hn, qn / hn, rn / hn, conc, params_);
            const double damp = 1.0 + dt * params_.g * k;
            qn = std::isinf(damp) ? 0.0 : qn / damp;
            rn = std::isinf(damp) ? 0.0 : rn / damp;
        }
        if (params_.erosion) {
            // water-surface slope; dry neighbours are replaced by the cell itself
            auto surf = [&](std::size_t j) { return hs_[j] >= h_min ? zb_[j] + hs_[j] : zb_[i] + hn; };
            const double e_c = zb_[i] + hn;
            const double west = cc > 0 ? surf(i - 1) : e_c;
            const double east = cc + 1 < cols ? surf(i + 1) : e_c;
            const double north = rr > 0 ? surf(i - cols) : e_c;
            const double south = rr + 1 < rows ? surf(i + cols) : e_c;
            const double gx = (east - west) / (2.0 * dx);
            const double gy = (south - north) / (2.0 * dx);
            const double tan_w = std::sqrt(gx * gx + gy * gy);
            const double speed = std::sqrt(qn * qn + rn * rn) / hn;
            const double c_inf = equilibrium_concentration(tan_w, params_);
            const double rate = erosion_deposition_velocity(conc, speed, c_inf, params_);
            if (rate > 0.0) {
                const double e = std::min(rate * dt, std::max(zb_[i] - floor[i], 0.0));
                hn += e;
                m_[i] += cstar * e;
                zb_[i] -= e;
            } else if (rate < 0.0) {
                const double d = std::min(-rate * dt, m_[i] / cstar);
                const double keep = (hn - d) / hn;
                hn -= d;
                m_[i] -= cstar * d;
                zb_[i] += d;
                qn *= keep;
                rn *= keep;
            }
        }
        hs_[i] = hn;
        qs_[i] = qn;
        rs_[i] = rn;
    });

    // back to primitive variables
    for_cells([&](std::size_t rr, std::size_t cc, std::size_t i) {
        const double hn = hs_[i];
        s.h[i] = hn;
        s.zb[i] = zb_[i];
        s.c[i] = hn > 0.0 ? std::clamp(m_[i] / hn, 0.0, cstar) : 0.0;
        if (hn >= h_min) {
            s.u[i] = qs_[i] / hn;
            s.v[i] = rs_[i] / hn;
        } else {
            s.u[i] = 0.0;
            s.v[i] = 0.0;
        }
        if (closed) {
            if (cc == 0 || cc == cols - 1) s.u[i] = 0.0;
            if (rr == 0 || rr == rows - 1) s.v[i] = 0.0;
        }
        const double vals[5] = {s.h[i], s.u[i], s.v[i], s.c[i], s.zb[i]};
        for (int k = 0; k < 5; ++k) {
            if (!std::isfinite(vals[k])) {
                throw SolverError("non-finite " + std::string(component_name(k)) + " at cell (" + std::to_string(rr) +
                                  ", " + std::to_string(cc) + ")");
            }
        }
    });
    return outflow;
}

FlowState maccormack_step(const FlowState& state, double dt, const SimParams& params, bool forward_predictor) {
    FlowState next = state;
    MacCormackSolver solver(state.header(), params);
    solver.step(next, dt, forward_predictor);
    return next;
}

double MassLedger::water_closure() const {
    const double scale = std::max(water_injected, water_initial);
    if (scale <= 0.0) return std::abs(water_stored - water_initial - water_outflow);
    return std::abs(water_injected - (water_stored - water_initial) - water_outflow) / scale;
}

double MassLedger::sediment_closure() const {
    const double scale = std::max(sediment_injected, sediment_initial);
    if (scale <= 0.0) return std::abs(sediment_stored - sediment_initial - sediment_outflow);
    return std::abs(sediment_injected - (sediment_stored - sediment_initial) - sediment_outflow) / scale;
}

namespace {

grid::Raster resolve_nodata(const grid::Raster& dem, std::vector<std::uint8_t>& mask) {
    dem.validate();
    grid::Raster bed = dem;
    mask.assign(dem.size(), 0);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dem.size(); ++i) {
        if (!dem.is_nodata(i)) top = std::max(top, dem[i]);
    }
    if (!std::isfinite(top)) throw ConfigError("DEM holds no valid cells");
    for (std::size_t i = 0; i < dem.size(); ++i) {
        if (dem.is_nodata(i)) {
            bed[i] = top + 1000.0;
            mask[i] = 1;
        }
    }
    return bed;
}

}  // namespace

Simulation::Simulation(const grid::Raster& dem, std::vector<SupplySpec> supplies, SimParams params)
    : params_(params), medium_(effective_medium(params)), supplies_(std::move(supplies)) {
    params_.validate();
    const grid::Raster bed = resolve_nodata(dem, nodata_mask_);
    for (const SupplySpec& s : supplies_) {
        s.validate(dem.header(), medium_.cstar);
        if (nodata_mask_[s.cell.row * dem.cols() + s.cell.col]) {
            throw ConfigError("supply at (" + std::to_string(s.cell.row) + ", " + std::to_string(s.cell.col) +
                              ") lies on a nodata cell");
        }
    }
    state_ = FlowState::dry(bed);
    init();
}

Simulation::Simulation(FlowState initial, std::vector<SupplySpec> supplies, SimParams params)
    : params_(params), medium_(effective_medium(params)), state_(std::move(initial)), supplies_(std::move(supplies)) {
    params_.validate();
    state_.validate(medium_.cstar, params_.h_min);
    nodata_mask_.assign(state_.h.size(), 0);
    for (const SupplySpec& s : supplies_) s.validate(state_.header(), medium_.cstar);
    init();
}

void Simulation::init() {
    initial_bed_ = state_.zb;
    grid::Raster floor = state_.zb;
    for (double& z : floor.data()) z -= params_.bedrock_depth;
    solver_.emplace(state_.header(), params_, std::move(floor));
    const double nodata = state_.header().nodata;
    max_level_ = grid::Raster(state_.header(), params_.max_level == MaxLevelMode::Depth ? 0.0 : nodata);
    track_max();
    const MassLedger stored = ledger();
    ledger_.water_initial = stored.water_stored;
    ledger_.sediment_initial = stored.sediment_stored;
}

void Simulation::track_max() {
    const bool depth = params_.max_level == MaxLevelMode::Depth;
    const double nodata = state_.header().nodata;
    for (std::size_t i = 0; i < state_.h.size(); ++i) {
        const double h = state_.h[i];
        if (depth) {
            max_level_[i] = std::max(max_level_[i], h);
        } else if (h >= params_.h_min) {
            const double eta = state_.zb[i] + h;
            max_level_[i] = max_level_[i] == nodata ? eta : std::max(max_level_[i], eta);
        }
    }
}

double Simulation::step(double t_limit) {
    double dt = std::min(stable_dt(state_, params_), t_limit - time_);
    if (dt <= 0.0) return 0.0;
    try {
        const SupplyVolumes added = apply_supplies(state_, supplies_, time_, dt);
        ledger_.water_injected += added.mixture - added.sediment;
        ledger_.sediment_injected += added.sediment;
        const bool forward = !params_.alternate_sweeps || steps_ % 2 == 0;
        const StepOutflow out = solver_->step(state_, dt, forward);
        ledger_.water_outflow += out.mixture - out.sediment;
        ledger_.sediment_outflow += out.sediment;
    } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " during step " + std::to_string(steps_ + 1) + " at t=" +
                          std::to_string(time_) + " s");
    }
    time_ += dt;
    ++steps_;
    track_max();
    return dt;
}

void Simulation::run_until(double t_end) {
    while (time_ < t_end) {
        // stop when the remaining interval is below rounding of the clock
        if (t_end - time_ <= 1e-12 * std::max(1.0, t_end)) break;
        step(t_end);
    }
}

void Simulation::run_steps(std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) step(std::numeric_limits<double>::infinity());
}

SimOutputs Simulation::outputs() const {
    SimOutputs out{max_level_, grid::Raster(state_.header(), 0.0)};
    const double nodata = state_.header().nodata;
    for (std::size_t i = 0; i < state_.zb.size(); ++i) {
        if (nodata_mask_[i]) {
            out.max_water_level[i] = nodata;
            out.deformation[i] = nodata;
        } else {
            out.deformation[i] = state_.zb[i] - initial_bed_[i];
        }
    }
    return out;
}

MassLedger Simulation::ledger() const {
    MassLedger l = ledger_;
    const double area = state_.header().cellsize * state_.header().cellsize;
    double flow_water = 0.0, flow_sed = 0.0, bed = 0.0;
    for (std::size_t i = 0; i < state_.h.size(); ++i) {
        const double m = state_.c[i] * state_.h[i];
        flow_water += state_.h[i] - m;
        flow_sed += m;
        bed += state_.zb[i] - initial_bed_[i];
    }
    l.water_stored = (flow_water + (1.0 - medium_.cstar) * bed) * area;
    l.sediment_stored = (flow_sed + medium_.cstar * bed) * area;
    return l;
}

SimResult Simulation::result() const {
    return SimResult{outputs(), ledger(), state_, steps_, time_};
}

SimResult run_simulation(const grid::Raster& dem, std::vector<SupplySpec> supplies, const SimParams& params,
                         double duration) {
    if (!(duration >= 0.0)) throw ConfigError("duration must be >= 0");
    Simulation sim(dem, std::move(supplies), params);
    sim.run_until(duration);
    return sim.result();
}

}  // namespace dfsim::sim
