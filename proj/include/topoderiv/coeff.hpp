#pragma once

#include "topoderiv/mesh.hpp"
#include "topoderiv/types.hpp"

#include <span>
#include <vector>

namespace topoderiv {

struct AdmissibilityParams {
    double alpha = 1.0;
};

/// ξᵀAξ ≥ α|ξ|² for all ξ, i.e. λ_min((A+Aᵀ)/2) ≥ α.
bool is_admissible(const Mat2& a, const AdmissibilityParams& params);

/// Piecewise-constant 2×2 coefficient, one matrix per mesh element.
class CoefficientField {
public:
    /// Throws InputError if any matrix violates admissibility (1e-12 slack).
    CoefficientField(std::vector<Mat2> per_element, AdmissibilityParams params);

    int size() const { return static_cast<int>(values_.size()); }
    const Mat2& operator[](int e) const { return values_[e]; }
    const std::vector<Mat2>& values() const { return values_; }
    const AdmissibilityParams& params() const { return params_; }

    bool is_symmetric(double tol = 1e-14) const;
    bool is_isotropic(double tol = 1e-14) const;

    /// Scalar value of an isotropic element (its (0,0) entry).
    double scalar(int e) const { return values_[e](0, 0); }

    /// max over elements of λ_max(sym) divided by min over elements of λ_min(sym).
    double condition_number() const;

    bool operator==(const CoefficientField& other) const { return values_ == other.values_; }

private:
    std::vector<Mat2> values_;
    AdmissibilityParams params_;
};

CoefficientField isotropic_field(const Mesh& mesh, std::span<const double> values, AdmissibilityParams params);
CoefficientField constant_field(const Mesh& mesh, const Mat2& value, AdmissibilityParams params);

/// Replace a by b on x₀ + rω.
struct PerturbationSpec {
    InclusionShape shape;
    Mat2 b = Mat2::Identity();
};

/// a_r = a + χ(b − a). In area_fraction mode cut elements receive the
/// arithmetic mean (1−w)a_e + w b.
CoefficientField perturb(const CoefficientField& coeff, const Mesh& mesh, const PerturbationSpec& spec,
                         TagMode mode = TagMode::centroid);

/// Same as perturb with precomputed inclusion weights.
CoefficientField perturb_with_weights(const CoefficientField& coeff, std::span<const double> weights, const Mat2& b);

}  // namespace topoderiv
