#include "topoderiv/coeff.hpp"

#include <algorithm>
#include <string>

namespace topoderiv {

bool is_admissible(const Mat2& a, const AdmissibilityParams& params) {
    return a.allFinite() && sym_min_eigenvalue(a) >= params.alpha;
}

CoefficientField::CoefficientField(std::vector<Mat2> per_element, AdmissibilityParams params)
    : values_(std::move(per_element)), params_(params) {
    if (!(params_.alpha > 0.0)) throw InputError("coefficient: alpha must be positive");
    for (std::size_t e = 0; e < values_.size(); ++e)
        if (!values_[e].allFinite() || sym_min_eigenvalue(values_[e]) < params_.alpha - 1e-12)
            throw InputError("coefficient: element " + std::to_string(e) + " is not admissible at alpha = " +
                             std::to_string(params_.alpha));
}

bool CoefficientField::is_symmetric(double tol) const {
    return std::all_of(values_.begin(), values_.end(),
                       [tol](const Mat2& a) { return std::abs(a(0, 1) - a(1, 0)) <= tol; });
}

bool CoefficientField::is_isotropic(double tol) const {
    return std::all_of(values_.begin(), values_.end(), [tol](const Mat2& a) {
        return std::abs(a(0, 1)) <= tol && std::abs(a(1, 0)) <= tol && std::abs(a(0, 0) - a(1, 1)) <= tol;
    });
}

double CoefficientField::condition_number() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& a : values_) {
        lo = std::min(lo, sym_min_eigenvalue(a));
        hi = std::max(hi, sym_max_eigenvalue(a));
    }
    return hi / lo;
}

CoefficientField isotropic_field(const Mesh& mesh, std::span<const double> values, AdmissibilityParams params) {
    if (static_cast<int>(values.size()) != mesh.num_elements())
        throw InputError("isotropic_field: expected one value per element");
    std::vector<Mat2> out;
    out.reserve(values.size());
    for (std::size_t e = 0; e < values.size(); ++e) {
        if (!(values[e] >= params.alpha))
            throw InputError("isotropic_field: value " + std::to_string(values[e]) + " at element " + std::to_string(e) +
                             " is below alpha");
        out.push_back(scalar_matrix(values[e]));
    }
    return CoefficientField(std::move(out), params);
}

CoefficientField constant_field(const Mesh& mesh, const Mat2& value, AdmissibilityParams params) {
    return CoefficientField(std::vector<Mat2>(mesh.num_elements(), value), params);
}

CoefficientField perturb_with_weights(const CoefficientField& coeff, std::span<const double> weights, const Mat2& b) {
    if (static_cast<int>(weights.size()) != coeff.size()) throw InputError("perturb: weight count mismatch");
    if (!is_admissible(b, coeff.params())) throw InputError("perturb: inserted value b is not admissible");
    std::vector<Mat2> out = coeff.values();
    for (std::size_t e = 0; e < out.size(); ++e) {
        const double w = weights[e];
        if (w >= 1.0)
            out[e] = b;
        else if (w > 0.0)
            out[e] = (1.0 - w) * out[e] + w * b;
    }
    return CoefficientField(std::move(out), coeff.params());
}

CoefficientField perturb(const CoefficientField& coeff, const Mesh& mesh, const PerturbationSpec& spec, TagMode mode) {
    if (coeff.size() != mesh.num_elements()) throw InputError("perturb: coefficient does not match mesh");
    const auto w = tag_inclusion(mesh, spec.shape, mode);
    return perturb_with_weights(coeff, w, spec.b);
}

}  // namespace topoderiv
