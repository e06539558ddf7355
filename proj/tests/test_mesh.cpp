#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include <map>
#include <set>

using namespace topoderiv;

namespace {

void check_invariants(const Mesh& m) {
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.element(e);
        const Vec2 u = m.vertex(t[1]) - m.vertex(t[0]), v = m.vertex(t[2]) - m.vertex(t[0]);
        CHECK(u.x() * v.y() - u.y() * v.x() > 0.0);
    }
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : m.elements())
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            ++edges[{std::min(a, b), std::max(a, b)}];
        }
    std::set<int> expected;
    const Rect& r = m.bounds();
    for (int i = 0; i < m.num_vertices(); ++i) {
        const Vec2& x = m.vertex(i);
        if (x.x() == r.lo.x() || x.x() == r.hi.x() || x.y() == r.lo.y() || x.y() == r.hi.y()) expected.insert(i);
    }
    std::set<int> from_edges;
    for (const auto& [e, count] : edges) {
        CHECK((count == 1 || count == 2));
        if (count == 1) {
            from_edges.insert(e.first);
            from_edges.insert(e.second);
        }
    }
    CHECK(from_edges == expected);
    CHECK(std::set<int>(m.boundary_nodes().begin(), m.boundary_nodes().end()) == expected);
}

}  // namespace

TEST_CASE("rect mesh sizes and areas") {
    const Mesh one = build_rect_mesh(Rect{}, 1);
    CHECK(one.num_vertices() == 4);
    CHECK(one.num_elements() == 2);

    const Mesh four = build_rect_mesh(Rect{}, 4);
    CHECK(four.num_elements() == 32);
    CHECK(four.total_area() == doctest::Approx(1.0).epsilon(1e-14));

    const Mesh wide = build_rect_mesh(Rect{{0.0, 0.0}, {2.0, 1.0}}, 8);
    CHECK(std::abs(wide.total_area() - 2.0) <= 1e-13);
    check_invariants(one);
    check_invariants(four);
    check_invariants(wide);
}

TEST_CASE("rect mesh rejects degenerate input") {
    CHECK_THROWS_AS(build_rect_mesh(Rect{}, 0), InputError);
    CHECK_THROWS_AS(build_rect_mesh(Rect{{0.0, 0.0}, {0.0, 1.0}}, 4), InputError);
}

TEST_CASE("uniform refinement") {
    const Mesh base = build_rect_mesh(Rect{}, 1);
    const Mesh r1 = uniform_refine(base);
    CHECK(r1.num_elements() == 8);
    CHECK(std::abs(r1.total_area() - base.total_area()) <= 1e-13);
    const Mesh r2 = uniform_refine(r1);
    CHECK(std::abs(base.max_element_diameter() / r2.max_element_diameter() - 4.0) <= 1e-12);
    check_invariants(r2);

    Mesh m = build_rect_mesh(Rect{{-1.0, 0.5}, {2.0, 1.7}}, 3);
    for (int k = 0; k < 4; ++k) {
        m = uniform_refine(m);
        CHECK(std::abs(m.total_area() - 3.0 * 1.2) <= 1e-12 * 3.6);
    }
    check_invariants(m);
}

TEST_CASE("locate element") {
    const Mesh m = build_rect_mesh(Rect{}, 6);
    for (int e = 0; e < m.num_elements(); ++e) CHECK(m.locate_element(m.element_centroid(e)) == e);

    // shared edge midpoint: lowest adjacent id
    std::map<std::pair<int, int>, std::vector<int>> owners;
    for (int e = 0; e < m.num_elements(); ++e)
        for (int k = 0; k < 3; ++k) {
            const int a = m.element(e)[k], b = m.element(e)[(k + 1) % 3];
            owners[{std::min(a, b), std::max(a, b)}].push_back(e);
        }
    int shared = 0;
    for (const auto& [edge, els] : owners) {
        if (els.size() != 2) continue;
        const Vec2 mid = 0.5 * (m.vertex(edge.first) + m.vertex(edge.second));
        const int found = m.locate_element(mid);
        CHECK(found <= std::min(els[0], els[1]));
        ++shared;
    }
    CHECK(shared > 0);

    const int corner = m.locate_element({1.0, 1.0});
    const auto& t = m.element(corner);
    bool incident = false;
    for (int v : t) incident |= (m.vertex(v) - Vec2(1.0, 1.0)).norm() == 0.0;
    CHECK(incident);
    CHECK_THROWS_AS(m.locate_element({1.5, 0.5}), NotFoundError);
    CHECK_FALSE(m.find_element({-0.1, 0.5}).has_value());
}

TEST_CASE("inclusion shape") {
    CHECK_THROWS_AS(InclusionShape({0.5, 0.5}, 0.1, Mat2::Identity() * 2.0), InputError);
    Mat2 skew;
    skew << 1.0, 0.1, 0.0, 1.0;
    CHECK_THROWS_AS(InclusionShape({0.5, 0.5}, 0.1, skew), InputError);
    CHECK_THROWS_AS(InclusionShape({0.5, 0.5}, -0.1, Mat2::Identity()), InputError);

    const InclusionShape e = InclusionShape::ellipse({0.0, 0.0}, 1.0, 4.0, pi / 6);
    CHECK(std::abs(e.shape_matrix.determinant() - 1.0) <= 1e-10);
    const Vec2 axis(std::cos(pi / 6), std::sin(pi / 6));
    CHECK(e.contains(1.99 * axis));
    CHECK_FALSE(e.contains(2.01 * axis));
    const Vec2 across(-axis.y(), axis.x());
    CHECK(e.contains(0.49 * across));
    CHECK_FALSE(e.contains(0.51 * across));

    const EllipseParameters p = ellipse_parameters(e.shape_matrix);
    CHECK(p.lambda == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(std::remainder(p.theta - pi / 6, pi)) <= 1e-12);
}

TEST_CASE("tag inclusion") {
    const Mesh m = build_rect_mesh(Rect{}, 64);
    const double h = m.max_element_diameter();

    SUBCASE("tiny shape inside one element") {
        const int e = m.locate_element({0.3, 0.3});
        const Vec2 c = m.element_centroid(e);
        const double r = 1e-3;
        const auto w = tag_inclusion(m, InclusionShape::ball(c, r), TagMode::area_fraction);
        double total = 0.0;
        for (int k = 0; k < m.num_elements(); ++k)
            if (k != e) total += w[k];
        CHECK(total == 0.0);
        // one sub-triangle centroid (the central one) falls inside, weight 1/16 vs true πr²/area
        CHECK(w[e] >= 0.0);
        CHECK(w[e] <= 1.0 / kAreaFractionSamples);
        const auto wc = tag_inclusion(m, InclusionShape::ball(c, r), TagMode::centroid);
        CHECK(wc[e] == 1.0);
    }

    SUBCASE("area error bound") {
        for (double r : {8 * h, 12 * h}) {
            for (double lam : {1.0, 2.0}) {
                const InclusionShape s = InclusionShape::ellipse({0.47, 0.52}, r, lam, 0.4);
                for (TagMode mode : {TagMode::centroid, TagMode::area_fraction}) {
                    const auto w = tag_inclusion(m, s, mode);
                    double area = 0.0;
                    for (int k = 0; k < m.num_elements(); ++k) area += w[k] * m.element_area(k);
                    CHECK(std::abs(area - s.area()) / s.area() <= 2.0 * h / r);
                }
            }
        }
    }

    SUBCASE("modes agree away from the interface") {
        const InclusionShape s = InclusionShape::ball({0.5, 0.5}, 0.2);
        const auto wc = tag_inclusion(m, s, TagMode::centroid);
        const auto wa = tag_inclusion(m, s, TagMode::area_fraction);
        for (int k = 0; k < m.num_elements(); ++k) {
            const auto& t = m.element(k);
            int inside = 0;
            for (int v : t) inside += s.contains(m.vertex(v));
            // the disc is convex: all vertices inside → element inside
            if (inside == 3) CHECK((wc[k] == 1.0 && wa[k] == 1.0));
            const double dist = (m.element_centroid(k) - s.center).norm();
            if (dist > s.radius + h) CHECK((wc[k] == 0.0 && wa[k] == 0.0));
        }
    }

    SUBCASE("support touching the boundary is rejected") {
        CHECK_THROWS_AS(tag_inclusion(m, InclusionShape::ball({0.1, 0.5}, 0.1), TagMode::centroid), InputError);
        CHECK_THROWS_AS(tag_inclusion(m, InclusionShape::ball({1.2, 0.5}, 0.1), TagMode::centroid), InputError);
    }
}

TEST_CASE("resolution rule") {
    const Mesh m = build_rect_mesh(Rect{}, 32);
    const double h = max_diameter_near(m, InclusionShape::ball({0.5, 0.5}, 0.1));
    CHECK(h == doctest::Approx(std::sqrt(2.0) / 32));
    CHECK_NOTHROW(check_resolution(m, InclusionShape::ball({0.5, 0.5}, 0.36)));
    try {
        check_resolution(m, InclusionShape::ball({0.5, 0.5}, 0.1));
        FAIL("expected ResolutionError");
    } catch (const ResolutionError& e) {
        // 0.1/h = 2.26 → two halvings reach 9.05 ≥ 8
        CHECK(e.required_refinements() == 2);
    }
}
