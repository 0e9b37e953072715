#include "atransn/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace atransn {
namespace {

constexpr double kPi = 3.14159265358979323846;

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_triplet_dims(ModelKind kind, std::span<const double> h, std::span<const double> r,
                        std::span<const double> t) {
    check_dim(t.size(), h.size(), "tail");
    const size_t want_r =
        static_cast<size_t>(relation_dim(kind, static_cast<int>(h.size())));
    check_dim(r.size(), want_r, "relation");
    if ((kind == ModelKind::ComplEx || kind == ModelKind::RotatE) && h.size() % 2 != 0) {
        throw ShapeError("complex-valued kinds need an even entity dim");
    }
}

double transe_score(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, Norm norm) {
    double acc = 0.0;
    for (size_t i = 0; i < h.size(); ++i) {
        const double u = h[i] + r[i] - t[i];
        acc += norm == Norm::L1 ? std::fabs(u) : u * u;
    }
    return norm == Norm::L1 ? acc : std::sqrt(acc);
}

double distmult_score(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t) {
    double acc = 0.0;
    for (size_t i = 0; i < h.size(); ++i) acc += h[i] * r[i] * t[i];
    return -acc;
}

// Re(h_j r_j conj(t_j)) summed over complex coordinates, negated.
double complex_score(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t) {
    const size_t d = h.size() / 2;
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double hr = h[j], hi = h[d + j];
        const double rr = r[j], ri = r[d + j];
        const double tr = t[j], ti = t[d + j];
        acc += (hr * rr - hi * ri) * tr + (hr * ri + hi * rr) * ti;
    }
    return -acc;
}

double rotate_score(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, Norm norm) {
    const size_t d = h.size() / 2;
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double c = std::cos(r[j]), s = std::sin(r[j]);
        const double ur = h[j] * c - h[d + j] * s - t[j];
        const double ui = h[j] * s + h[d + j] * c - t[d + j];
        const double sq = ur * ur + ui * ui;
        acc += norm == Norm::L1 ? std::sqrt(sq) : sq;
    }
    return norm == Norm::L1 ? acc : std::sqrt(acc);
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "transe") return ModelKind::TransE;
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "complex") return ModelKind::ComplEx;
    if (name == "rotate") return ModelKind::RotatE;
    throw ConfigError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::TransE: return "transe";
        case ModelKind::DistMult: return "distmult";
        case ModelKind::ComplEx: return "complex";
        case ModelKind::RotatE: return "rotate";
    }
    return "?";
}

double score(ModelKind kind, std::span<const double> h, std::span<const double> r,
             std::span<const double> t, Norm norm) {
    check_triplet_dims(kind, h, r, t);
    switch (kind) {
        case ModelKind::TransE: return transe_score(h, r, t, norm);
        case ModelKind::DistMult: return distmult_score(h, r, t);
        case ModelKind::ComplEx: return complex_score(h, r, t);
        case ModelKind::RotatE: return rotate_score(h, r, t, norm);
    }
    throw ShapeError("bad kind");
}

double score_grad(ModelKind kind, std::span<const double> h, std::span<const double> r,
                  std::span<const double> t, TripletGrad& grad, Norm norm) {
    check_triplet_dims(kind, h, r, t);
    const size_t n = h.size();
    grad.d_head.assign(n, 0.0);
    grad.d_relation.assign(r.size(), 0.0);
    grad.d_tail.assign(n, 0.0);

    switch (kind) {
        case ModelKind::TransE: {
            const double f = transe_score(h, r, t, norm);
            for (size_t i = 0; i < n; ++i) {
                const double u = h[i] + r[i] - t[i];
                const double g = norm == Norm::L1 ? sign0(u) : (f > 0.0 ? u / f : 0.0);
                grad.d_head[i] = g;
                grad.d_relation[i] = g;
                grad.d_tail[i] = -g;
            }
            return f;
        }
        case ModelKind::DistMult: {
            for (size_t i = 0; i < n; ++i) {
                grad.d_head[i] = -r[i] * t[i];
                grad.d_relation[i] = -h[i] * t[i];
                grad.d_tail[i] = -h[i] * r[i];
            }
            return distmult_score(h, r, t);
        }
        case ModelKind::ComplEx: {
            const size_t d = n / 2;
            for (size_t j = 0; j < d; ++j) {
                const double hr = h[j], hi = h[d + j];
                const double rr = r[j], ri = r[d + j];
                const double tr = t[j], ti = t[d + j];
                grad.d_head[j] = -(rr * tr + ri * ti);
                grad.d_head[d + j] = -(rr * ti - ri * tr);
                grad.d_relation[j] = -(hr * tr + hi * ti);
                grad.d_relation[d + j] = -(hr * ti - hi * tr);
                grad.d_tail[j] = -(hr * rr - hi * ri);
                grad.d_tail[d + j] = -(hr * ri + hi * rr);
            }
            return complex_score(h, r, t);
        }
        case ModelKind::RotatE: {
            const size_t d = n / 2;
            const double f = rotate_score(h, r, t, norm);
            for (size_t j = 0; j < d; ++j) {
                const double c = std::cos(r[j]), s = std::sin(r[j]);
                const double ur = h[j] * c - h[d + j] * s - t[j];
                const double ui = h[j] * s + h[d + j] * c - t[d + j];
                // Scale turning (ur, ui) partials into partials of f:
                // 1/modulus per coordinate for L1, 1/f globally for L2.
                double w;
                if (norm == Norm::L1) {
                    const double m = std::sqrt(ur * ur + ui * ui);
                    w = m > 0.0 ? 1.0 / m : 0.0;
                } else {
                    w = f > 0.0 ? 1.0 / f : 0.0;
                }
                grad.d_head[j] = w * (ur * c + ui * s);
                grad.d_head[d + j] = w * (-ur * s + ui * c);
                grad.d_relation[j] =
                    w * (ur * (-h[j] * s - h[d + j] * c) + ui * (h[j] * c - h[d + j] * s));
                grad.d_tail[j] = -w * ur;
                grad.d_tail[d + j] = -w * ui;
            }
            return f;
        }
    }
    throw ShapeError("bad kind");
}

namespace {

// Wraps into [-pi, pi).
double wrap_phase(double theta) {
    double w = theta - 2.0 * kPi * std::floor((theta + kPi) / (2.0 * kPi));
    if (w >= kPi) w = -kPi;  // guard against floor rounding at the seam
    return w;
}

int normalize_entity_row(Matrix& entities, int32_t row_id) {
    auto row = entities.row(row_id);
    const double norm = norm2(row);
    if (norm == 0.0) return 1;
    scale(row, 1.0 / norm);
    return 0;
}

}  // namespace

int project_constraints(EmbeddingTable& table) {
    int zero_rows = 0;
    if (table.kind == ModelKind::TransE) {
        for (int32_t i = 0; i < table.entities.rows; ++i) {
            zero_rows += normalize_entity_row(table.entities, i);
        }
    } else if (table.kind == ModelKind::RotatE) {
        for (double& v : table.relations.data) v = wrap_phase(v);
    }
    return zero_rows;
}

int project_entity_rows(EmbeddingTable& table, std::span<const int32_t> rows) {
    if (table.kind != ModelKind::TransE) return 0;
    int zero_rows = 0;
    for (int32_t id : rows) zero_rows += normalize_entity_row(table.entities, id);
    return zero_rows;
}

void project_relation_rows(EmbeddingTable& table, std::span<const int32_t> rows) {
    if (table.kind != ModelKind::RotatE) return;
    for (int32_t id : rows) {
        for (double& v : table.relations.row(id)) v = wrap_phase(v);
    }
}

}  // namespace atransn
