#include "klnmf/bregman.hpp"

namespace klnmf {

namespace {

void require_positive_block(const Matrix& a, const char* what) {
    if (a.size() == 0 || a.minCoeff() <= 0.0)
        throw std::domain_error(std::string(what) +
                                ": entries must be strictly positive");
}

}  // namespace

double phi(const Matrix& a) {
    require_positive_block(a, "phi");
    return (-a.array().log() + 0.5 * a.array().square()).sum();
}

double phi(const FactorPair& z) { return phi(z.W) + phi(z.H); }

FactorPair grad_phi(const FactorPair& z) {
    require_strictly_positive(z, "grad_phi");
    FactorPair g;
    g.W = (z.W.array() - z.W.array().inverse()).matrix();
    g.H = (z.H.array() - z.H.array().inverse()).matrix();
    return g;
}

double bregman_distance(const FactorPair& z1, const FactorPair& z2) {
    if (!same_shape(z1, z2))
        throw std::invalid_argument("bregman_distance: shape mismatch");
    require_strictly_positive(z1, "bregman_distance");
    const FactorPair g2 = grad_phi(z2);
    FactorPair diff{z1.W - z2.W, z1.H - z2.H};
    return phi(z1) - phi(z2) - dot(g2, diff);
}

}  // namespace klnmf
