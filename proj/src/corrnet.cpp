#include "crlkit/corrnet.hpp"

#include <cmath>
#include <sstream>

#include "crlkit/common.hpp"

namespace crlkit {

ReconLoss recon_loss_from_name(const std::string& name) {
    if (name == "squared") return ReconLoss::Squared;
    if (name == "cross_entropy") return ReconLoss::CrossEntropy;
    throw ConfigError("unknown reconstruction loss '" + name +
                      "' (expected squared|cross_entropy)");
}

std::string recon_loss_name(ReconLoss l) {
    return l == ReconLoss::Squared ? "squared" : "cross_entropy";
}

namespace {

void fill_uniform(DenseMatrix& m, double fan_in, double fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : m.data) v = rng.uniform(-bound, bound);
}

double softplus(double s) {
    return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

}  // namespace

CorrNetParams init_corrnet(std::size_t k, std::size_t d1, std::size_t d2, Activation f,
                           Activation g, ReconLoss loss, Rng& rng) {
    if (k < 1 || d1 < 1 || d2 < 1)
        throw DimensionError("init_corrnet: k, d1, d2 must all be >= 1");
    CorrNetParams p;
    p.k = k;
    p.d1 = d1;
    p.d2 = d2;
    p.W = DenseMatrix(k, d1);
    p.V = DenseMatrix(k, d2);
    p.b = DenseVector(k, 0.0);
    p.Wp = DenseMatrix(d1, k);
    p.Vp = DenseMatrix(d2, k);
    p.bp = DenseVector(d1 + d2, 0.0);
    fill_uniform(p.W, static_cast<double>(d1), static_cast<double>(k), rng);
    fill_uniform(p.V, static_cast<double>(d2), static_cast<double>(k), rng);
    fill_uniform(p.Wp, static_cast<double>(k), static_cast<double>(d1), rng);
    fill_uniform(p.Vp, static_cast<double>(k), static_cast<double>(d2), rng);
    p.f_act = f;
    p.g_act = g;
    p.recon_loss = loss;
    validate(p);
    return p;
}

void validate(const CorrNetParams& p) {
    if (p.k < 1 || p.d1 < 1 || p.d2 < 1)
        throw DimensionError("CorrNetParams: k, d1, d2 must all be >= 1");
    auto expect = [](const char* name, bool ok) {
        if (!ok) throw DimensionError(std::string("CorrNetParams: inconsistent shape for ") + name);
    };
    expect("W", p.W.rows == p.k && p.W.cols == p.d1);
    expect("V", p.V.rows == p.k && p.V.cols == p.d2);
    expect("b", p.b.len() == p.k);
    expect("W'", p.Wp.rows == p.d1 && p.Wp.cols == p.k);
    expect("V'", p.Vp.rows == p.d2 && p.Vp.cols == p.k);
    expect("b'", p.bp.len() == p.d1 + p.d2);
    if (p.recon_loss == ReconLoss::CrossEntropy && p.g_act != Activation::Sigmoid)
        throw ConfigError(
            "cross_entropy reconstruction requires a sigmoid output activation");
}

LossTermMask LossTermMask::corrnet(double lambda) {
    LossTermMask m;
    m.l1 = m.l2 = m.l3 = m.l4 = true;
    m.lambda = lambda;
    return m;
}

LossTermMask LossTermMask::corrnet123() {
    LossTermMask m;
    m.l1 = m.l2 = m.l3 = true;
    return m;
}

LossTermMask LossTermMask::single(int term, double lambda) {
    LossTermMask m;
    m.lambda = lambda;
    switch (term) {
        case 1: m.l1 = true; break;
        case 2: m.l2 = true; break;
        case 3: m.l3 = true; break;
        case 4: m.l4 = true; break;
        case 5: m.l5 = true; break;
        case 6: m.l6 = true; break;
        case 7: m.l7 = true; break;
        case 8: m.l8 = true; break;
        default: throw ConfigError("loss term index must be in 1..8");
    }
    return m;
}

LossTermMask LossTermMask::from_names(const std::string& names, double lambda) {
    LossTermMask m;
    m.lambda = lambda;
    std::string tok;
    std::istringstream in(names);
    bool saw_any = false;
    while (std::getline(in, tok, ',')) {
        // Accept "L1" / "l1" / "1", with ',' or '+' as separators.
        std::string t;
        for (char c : tok)
            if (!isspace(static_cast<unsigned char>(c))) t += c;
        std::istringstream parts(t);
        std::string piece;
        while (std::getline(parts, piece, '+')) {
            if (piece.empty()) continue;
            if (piece[0] == 'L' || piece[0] == 'l') piece = piece.substr(1);
            int idx = 0;
            try {
                idx = std::stoi(piece);
            } catch (...) {
                throw ConfigError("bad loss term '" + piece + "' in mask '" + names + "'");
            }
            LossTermMask one = single(idx);
            m.l1 |= one.l1; m.l2 |= one.l2; m.l3 |= one.l3; m.l4 |= one.l4;
            m.l5 |= one.l5; m.l6 |= one.l6; m.l7 |= one.l7; m.l8 |= one.l8;
            saw_any = true;
        }
    }
    if (!saw_any) throw ConfigError("empty loss term mask '" + names + "'");
    return m;
}

bool LossTermMask::term(int i) const {
    switch (i) {
        case 1: return l1;
        case 2: return l2;
        case 3: return l3;
        case 4: return l4;
        case 5: return l5;
        case 6: return l6;
        case 7: return l7;
        case 8: return l8;
    }
    return false;
}

std::string LossTermMask::to_string() const {
    std::string out;
    for (int i = 1; i <= 8; ++i) {
        if (!term(i)) continue;
        if (!out.empty()) out += '+';
        out += 'L';
        out += static_cast<char>('0' + i);
    }
    return out;
}

std::optional<double> LossBreakdown::term(int i) const {
    switch (i) {
        case 1: return l1;
        case 2: return l2;
        case 3: return l3;
        case 4: return l4;
        case 5: return l5;
        case 6: return l6;
        case 7: return l7;
        case 8: return l8;
    }
    return std::nullopt;
}

namespace {

void check_x_cols(const CorrNetParams& p, const DenseMatrix& X) {
    if (X.cols != p.d1)
        throw DimensionError("x view has " + std::to_string(X.cols) + " columns, expected d1=" +
                             std::to_string(p.d1));
}

void check_y_cols(const CorrNetParams& p, const DenseMatrix& Y) {
    if (Y.cols != p.d2)
        throw DimensionError("y view has " + std::to_string(Y.cols) + " columns, expected d2=" +
                             std::to_string(p.d2));
}

}  // namespace

DenseMatrix encode_both(const CorrNetParams& p, const DenseMatrix& X, const DenseMatrix& Y) {
    check_x_cols(p, X);
    check_y_cols(p, Y);
    if (X.rows != Y.rows) throw DimensionError("encode_both: row count mismatch");
    DenseMatrix pre = matmul_nt(X, p.W);  // n x k
    add_inplace(pre, matmul_nt(Y, p.V));
    add_row_broadcast(pre, p.b);
    activate_inplace(p.f_act, pre);
    return pre;
}

DenseMatrix encode_x(const CorrNetParams& p, const DenseMatrix& X) {
    check_x_cols(p, X);
    DenseMatrix pre = matmul_nt(X, p.W);
    add_row_broadcast(pre, p.b);
    activate_inplace(p.f_act, pre);
    return pre;
}

DenseMatrix encode_y(const CorrNetParams& p, const DenseMatrix& Y) {
    check_y_cols(p, Y);
    DenseMatrix pre = matmul_nt(Y, p.V);
    add_row_broadcast(pre, p.b);
    activate_inplace(p.f_act, pre);
    return pre;
}

DenseMatrix encode_view(const CorrNetParams& p, View v, const DenseMatrix& data) {
    return v == View::X ? encode_x(p, data) : encode_y(p, data);
}

namespace {

struct DecodePre {
    DenseMatrix Sx, Sy;  // pre-activations, kept only for cross-entropy
    DenseMatrix Xr, Yr;  // activations
};

DecodePre decode_with_pre(const CorrNetParams& p, const DenseMatrix& H) {
    if (H.cols != p.k)
        throw DimensionError("decode: hidden width " + std::to_string(H.cols) + " != k=" +
                             std::to_string(p.k));
    const bool keep_pre = p.recon_loss == ReconLoss::CrossEntropy;
    DecodePre d;
    d.Xr = matmul_nt(H, p.Wp);  // n x d1
    d.Yr = matmul_nt(H, p.Vp);  // n x d2
    DenseVector bx(p.d1), by(p.d2);
    for (std::size_t i = 0; i < p.d1; ++i) bx[i] = p.bp[i];
    for (std::size_t i = 0; i < p.d2; ++i) by[i] = p.bp[p.d1 + i];
    add_row_broadcast(d.Xr, bx);
    add_row_broadcast(d.Yr, by);
    if (keep_pre) {
        d.Sx = d.Xr;
        d.Sy = d.Yr;
    }
    activate_inplace(p.g_act, d.Xr);
    activate_inplace(p.g_act, d.Yr);
    return d;
}

double sse(const DenseMatrix& target, const DenseMatrix& pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        double d = target.data[i] - pred.data[i];
        acc += d * d;
    }
    return acc;
}

// Binary cross-entropy from pre-activations: sum of softplus(s) - t*s.
double bce_from_pre(const DenseMatrix& target, const DenseMatrix& S) {
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        acc += softplus(S.data[i]) - target.data[i] * S.data[i];
    return acc;
}

void check_ce_targets(const DenseMatrix& t, const char* which) {
    for (double v : t.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw NumericError(std::string("cross_entropy: ") + which +
                               " targets must lie in [0,1]");
}

// Per-column correlation statistics of Hx vs Hy with the eps stabilizer.
struct CorrStats {
    DenseVector mean_a, mean_b;     // k
    DenseVector cov, var_a, var_b;  // centered sums, not normalized
    DenseVector denom;              // sqrt(var_a*var_b + eps)
    double total = 0.0;             // sum_j cov_j / denom_j
};

CorrStats corr_stats(const DenseMatrix& Ha, const DenseMatrix& Hb) {
    const std::size_t n = Ha.rows, k = Ha.cols;
    CorrStats s;
    s.mean_a = col_means(Ha);
    s.mean_b = col_means(Hb);
    s.cov = DenseVector(k, 0.0);
    s.var_a = DenseVector(k, 0.0);
    s.var_b = DenseVector(k, 0.0);
    s.denom = DenseVector(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ra = Ha.row_ptr(i);
        const double* rb = Hb.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) {
            double da = ra[j] - s.mean_a[j];
            double db = rb[j] - s.mean_b[j];
            s.cov[j] += da * db;
            s.var_a[j] += da * da;
            s.var_b[j] += db * db;
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        s.denom[j] = std::sqrt(s.var_a[j] * s.var_b[j] + kCorrEps);
        s.total += s.cov[j] / s.denom[j];
    }
    return s;
}

// d(corr_total)/dHa and /dHb scaled by `scale`, accumulated in place.
// With centered values a~, b~ and D = sqrt(Va*Vb + eps):
//   d corr_j / d a_pj = b~_p / D - cov_j * Vb_j * a~_p / D^3
void accumulate_corr_grad(const DenseMatrix& Ha, const DenseMatrix& Hb, const CorrStats& s,
                          double scale, DenseMatrix& dHa, DenseMatrix& dHb) {
    const std::size_t n = Ha.rows, k = Ha.cols;
    for (std::size_t j = 0; j < k; ++j) {
        double D = s.denom[j];
        double c_over_d2 = s.cov[j] / (D * D);
        double fa = c_over_d2 * s.var_b[j];
        double fb = c_over_d2 * s.var_a[j];
        for (std::size_t i = 0; i < n; ++i) {
            double da = Ha(i, j) - s.mean_a[j];
            double db = Hb(i, j) - s.mean_b[j];
            dHa(i, j) += scale * (db - fa * da) / D;
            dHb(i, j) += scale * (da - fb * db) / D;
        }
    }
}

struct PathNeeds {
    bool hz = false, hx = false, hy = false;
    double cz_x = 0, cz_y = 0;  // multiplicity of x-/y-half targets per path
    double cx_x = 0, cx_y = 0;
    double cy_x = 0, cy_y = 0;
};

PathNeeds analyze(const LossTermMask& m) {
    PathNeeds nd;
    nd.cz_x = m.l1 ? 1.0 : 0.0;
    nd.cz_y = m.l1 ? 1.0 : 0.0;
    nd.cx_x = (m.l2 ? 1.0 : 0.0) + (m.l7 ? 1.0 : 0.0);
    nd.cx_y = (m.l2 ? 1.0 : 0.0) + (m.l5 ? 1.0 : 0.0);
    nd.cy_x = (m.l3 ? 1.0 : 0.0) + (m.l6 ? 1.0 : 0.0);
    nd.cy_y = (m.l3 ? 1.0 : 0.0) + (m.l8 ? 1.0 : 0.0);
    nd.hz = m.l1;
    nd.hx = m.l4 || nd.cx_x > 0 || nd.cx_y > 0;
    nd.hy = m.l4 || nd.cy_x > 0 || nd.cy_y > 0;
    return nd;
}

void check_batch(const CorrNetParams& p, const TwoViewBatch& batch, const LossTermMask& mask) {
    if (!mask.any()) throw ConfigError("loss term mask selects no terms");
    check_x_cols(p, batch.X);
    check_y_cols(p, batch.Y);
    if (batch.X.rows != batch.Y.rows)
        throw DimensionError("two-view batch: X has " + std::to_string(batch.X.rows) +
                             " rows, Y has " + std::to_string(batch.Y.rows));
    if (mask.l4 && batch.n() < 2)
        throw DimensionError("correlation term needs a batch of at least 2 rows");
    if (p.recon_loss == ReconLoss::CrossEntropy) {
        if (p.g_act != Activation::Sigmoid)
            throw ConfigError("cross_entropy reconstruction requires a sigmoid output activation");
        check_ce_targets(batch.X, "x");
        check_ce_targets(batch.Y, "y");
    }
}

struct ForwardState {
    PathNeeds nd;
    DenseMatrix Hz, Hx, Hy;
    DecodePre dz, dx, dy;
    CorrStats cs;
    LossBreakdown loss;
};

ForwardState forward(const CorrNetParams& p, const TwoViewBatch& batch,
                     const LossTermMask& mask) {
    check_batch(p, batch, mask);
    ForwardState st;
    st.nd = analyze(mask);
    const bool ce = p.recon_loss == ReconLoss::CrossEntropy;

    if (st.nd.hz) st.Hz = encode_both(p, batch.X, batch.Y);
    if (st.nd.hx) st.Hx = encode_x(p, batch.X);
    if (st.nd.hy) st.Hy = encode_y(p, batch.Y);

    if (st.nd.cz_x > 0 || st.nd.cz_y > 0) st.dz = decode_with_pre(p, st.Hz);
    if (st.nd.cx_x > 0 || st.nd.cx_y > 0) st.dx = decode_with_pre(p, st.Hx);
    if (st.nd.cy_x > 0 || st.nd.cy_y > 0) st.dy = decode_with_pre(p, st.Hy);

    auto recon = [&](const DenseMatrix& target, const DecodePre& d, bool x_half) {
        if (ce) return bce_from_pre(target, x_half ? d.Sx : d.Sy);
        return sse(target, x_half ? d.Xr : d.Yr);
    };

    LossBreakdown& out = st.loss;
    if (mask.l1) out.l1 = recon(batch.X, st.dz, true) + recon(batch.Y, st.dz, false);
    if (mask.l2) out.l2 = recon(batch.X, st.dx, true) + recon(batch.Y, st.dx, false);
    if (mask.l3) out.l3 = recon(batch.X, st.dy, true) + recon(batch.Y, st.dy, false);
    if (mask.l5) out.l5 = recon(batch.Y, st.dx, false);
    if (mask.l6) out.l6 = recon(batch.X, st.dy, true);
    if (mask.l7) out.l7 = recon(batch.X, st.dx, true);
    if (mask.l8) out.l8 = recon(batch.Y, st.dy, false);
    if (mask.l4) {
        st.cs = corr_stats(st.Hx, st.Hy);
        out.corr_value = st.cs.total;
        out.l4 = mask.lambda * st.cs.total;
    }
    double total = 0.0;
    for (int t : {1, 2, 3, 5, 6, 7, 8})
        if (auto v = out.term(t)) total += *v;
    if (mask.l4) total -= *out.l4;
    out.total = total;
    return st;
}

}  // namespace

std::pair<DenseMatrix, DenseMatrix> decode(const CorrNetParams& p, const DenseMatrix& H) {
    DecodePre d = decode_with_pre(p, H);
    return {std::move(d.Xr), std::move(d.Yr)};
}

LossBreakdown corrnet_loss(const CorrNetParams& p, const TwoViewBatch& batch,
                           const LossTermMask& mask) {
    return forward(p, batch, mask).loss;
}

std::pair<LossBreakdown, CorrNetGrads> corrnet_loss_grad(const CorrNetParams& p,
                                                         const TwoViewBatch& batch,
                                                         const LossTermMask& mask) {
    ForwardState st = forward(p, batch, mask);
    const PathNeeds& nd = st.nd;
    const bool ce = p.recon_loss == ReconLoss::CrossEntropy;
    CorrNetGrads g = zero_grads(p);

    // dLoss/dS for one decode half given its target and path multiplicity.
    auto d_pre = [&](const DenseMatrix& target, const DenseMatrix& P, double coeff) {
        DenseMatrix dS(P.rows, P.cols);
        if (ce) {
            for (std::size_t i = 0; i < P.size(); ++i)
                dS.data[i] = coeff * (P.data[i] - target.data[i]);
        } else {
            for (std::size_t i = 0; i < P.size(); ++i)
                dS.data[i] = coeff * 2.0 * (P.data[i] - target.data[i]) *
                             activation_deriv_from_output(p.g_act, P.data[i]);
        }
        return dS;
    };

    auto back_decode = [&](const DecodePre& d, const DenseMatrix& H, double cx, double cy) {
        DenseMatrix dH(H.rows, H.cols, 0.0);
        if (cx > 0) {
            DenseMatrix dSx = d_pre(batch.X, d.Xr, cx);
            add_inplace(g.dWp, matmul_tn(dSx, H));
            DenseVector s = col_sums(dSx);
            for (std::size_t i = 0; i < p.d1; ++i) g.dbp[i] += s[i];
            add_inplace(dH, matmul(dSx, p.Wp));
        }
        if (cy > 0) {
            DenseMatrix dSy = d_pre(batch.Y, d.Yr, cy);
            add_inplace(g.dVp, matmul_tn(dSy, H));
            DenseVector s = col_sums(dSy);
            for (std::size_t i = 0; i < p.d2; ++i) g.dbp[p.d1 + i] += s[i];
            add_inplace(dH, matmul(dSy, p.Vp));
        }
        return dH;
    };

    DenseMatrix dHz, dHx, dHy;
    if (nd.hz) dHz = DenseMatrix(st.Hz.rows, st.Hz.cols, 0.0);
    if (nd.hx) dHx = DenseMatrix(st.Hx.rows, st.Hx.cols, 0.0);
    if (nd.hy) dHy = DenseMatrix(st.Hy.rows, st.Hy.cols, 0.0);

    if (nd.cz_x > 0 || nd.cz_y > 0) add_inplace(dHz, back_decode(st.dz, st.Hz, nd.cz_x, nd.cz_y));
    if (nd.cx_x > 0 || nd.cx_y > 0) add_inplace(dHx, back_decode(st.dx, st.Hx, nd.cx_x, nd.cx_y));
    if (nd.cy_x > 0 || nd.cy_y > 0) add_inplace(dHy, back_decode(st.dy, st.Hy, nd.cy_x, nd.cy_y));

    // total subtracts lambda * corr, hence the negative scale.
    if ((st.loss.l4 ? true : false))
        accumulate_corr_grad(st.Hx, st.Hy, st.cs, -mask.lambda, dHx, dHy);

    auto back_encode = [&](const DenseMatrix& H, const DenseMatrix& dH, const DenseMatrix* X,
                           const DenseMatrix* Y) {
        DenseMatrix dPre(H.rows, H.cols);
        for (std::size_t i = 0; i < H.size(); ++i)
            dPre.data[i] = dH.data[i] * activation_deriv_from_output(p.f_act, H.data[i]);
        if (X) add_inplace(g.dW, matmul_tn(dPre, *X));
        if (Y) add_inplace(g.dV, matmul_tn(dPre, *Y));
        DenseVector s = col_sums(dPre);
        for (std::size_t j = 0; j < p.k; ++j) g.db[j] += s[j];
    };

    if (nd.hz) back_encode(st.Hz, dHz, &batch.X, &batch.Y);
    if (nd.hx) back_encode(st.Hx, dHx, &batch.X, nullptr);
    if (nd.hy) back_encode(st.Hy, dHy, nullptr, &batch.Y);

    return {st.loss, std::move(g)};
}

CorrNetGrads corrnet_grad(const CorrNetParams& p, const TwoViewBatch& batch,
                          const LossTermMask& mask) {
    return corrnet_loss_grad(p, batch, mask).second;
}

CorrNetGrads zero_grads(const CorrNetParams& p) {
    CorrNetGrads g;
    g.dW = DenseMatrix(p.k, p.d1, 0.0);
    g.dV = DenseMatrix(p.k, p.d2, 0.0);
    g.dWp = DenseMatrix(p.d1, p.k, 0.0);
    g.dVp = DenseMatrix(p.d2, p.k, 0.0);
    g.db = DenseVector(p.k, 0.0);
    g.dbp = DenseVector(p.d1 + p.d2, 0.0);
    return g;
}

}  // namespace crlkit
