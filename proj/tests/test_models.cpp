#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace recon_net;

namespace {

void expect_dyad(const DyadProbabilities& d, double ij, double ji, double both, double none, double tol = 1e-15) {
    EXPECT_NEAR(d.ij_only, ij, tol);
    EXPECT_NEAR(d.ji_only, ji, tol);
    EXPECT_NEAR(d.both, both, tol);
    EXPECT_NEAR(d.none, none, tol);
}

double total(const DyadProbabilities& d) { return d.ij_only + d.ji_only + d.both + d.none; }

// Log-uniform over [1e-4, 1e4].
double positive(Rng& rng) { return std::exp((rng.uniform() * 2.0 - 1.0) * 4.0 * std::log(10.0)); }

bool is_domain_error(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind() == ErrorKind::domain;
    }
    return false;
}

}  // namespace

TEST(DcmProb, Examples) {
    EXPECT_EQ(dcm_prob(1, 1), 0.5);
    EXPECT_EQ(dcm_prob(0, 7), 0.0);
    EXPECT_DOUBLE_EQ(dcm_prob(2, 3), 6.0 / 7.0);
    EXPECT_TRUE(is_domain_error([] { dcm_prob(-1, 1); }));
}

TEST(FdcmProb, Examples) {
    EXPECT_EQ(fdcm_prob(1, 1, 1), 0.5);
    EXPECT_EQ(fdcm_prob(0, 5, 9), 0.0);
    EXPECT_DOUBLE_EQ(fdcm_prob(1, 2, 3), 6.0 / 7.0);
    EXPECT_TRUE(is_domain_error([] { fdcm_prob(1, -2, 3); }));
    EXPECT_TRUE(is_domain_error([] { fdcm_prob(std::nan(""), 2, 3); }));
}

TEST(FdcmDyadProbs, Examples) {
    const auto unit = support::unit_fitness(4);
    expect_dyad(fdcm_dyad_probs(1.0, unit, 0, 1), 0.25, 0.25, 0.25, 0.25);
    EXPECT_EQ(fdcm_dyad_probs(1.0, unit, 2, 3).both, 0.25);
    FitnessData f;
    f.assets = {0.0, 1.0};
    f.liabilities = {1.0, 3.0};
    // p_01 = 0, p_10 = 1*1*1/(1+1) = 0.5.
    expect_dyad(fdcm_dyad_probs(1.0, f, 0, 1), 0.0, 0.5, 0.0, 0.5);
    EXPECT_TRUE(is_domain_error([&] { fdcm_dyad_probs(1.0, unit, 1, 1); }));
}

TEST(GrmDyadProbs, Examples) {
    expect_dyad(grm_dyad_probs(1, 1, 1, 1, 1), 0.25, 0.25, 0.25, 0.25);
    EXPECT_EQ(grm_dyad_probs(2, 3, 0.5, 1.5, 0).both, 0.0);
    expect_dyad(grm_dyad_probs(1, 1, 1, 1, std::sqrt(2.0)), 0.2, 0.2, 0.4, 0.2);
    EXPECT_TRUE(is_domain_error([] { grm_dyad_probs(1, 1, 1, 1, -1); }));
}

TEST(RcmDyadProbs, Examples) {
    expect_dyad(rcm_dyad_probs(1, 1, 1, 1, 1, 1), 0.25, 0.25, 0.25, 0.25);
    EXPECT_EQ(rcm_dyad_probs(1, 2, 0, 3, 1, 5).both, 0.0);
    // x = (1, 2), y = (1, 1), z = (1, 1): w = 1 + 1 + 2 + 1 = 5.
    expect_dyad(rcm_dyad_probs(1, 1, 1, 2, 1, 1), 0.2, 0.4, 0.2, 0.2);
}

TEST(FgrmDyadProbs, Examples) {
    const auto a = fgrm_dyad_probs(1, 1, 1, 1, 1, 1);
    expect_dyad(a, 0.25, 0.25, 0.25, 0.25);
    EXPECT_EQ(a.p_ij(), fdcm_prob(1, 1, 1));
    expect_dyad(fgrm_dyad_probs(1, 0, 1, 1, 1, 1), 1.0 / 3, 1.0 / 3, 0.0, 1.0 / 3);
    expect_dyad(fgrm_dyad_probs(1, std::sqrt(2.0), 1, 1, 1, 1), 0.2, 0.2, 0.4, 0.2);
    EXPECT_TRUE(is_domain_error([] { fgrm_dyad_probs(1, 1, -1, 1, 1, 1); }));
}

TEST(ModelProperties, EveryKernelSumsToOne) {
    Rng rng(41);
    for (int k = 0; k < 100000; ++k) {
        const double a = positive(rng), b = positive(rng), c = positive(rng), d = positive(rng), e = positive(rng),
                     g = positive(rng);
        const FitnessData f{{a, c}, {b, d}, {}};
        for (const DyadProbabilities& p :
             {fdcm_dyad_probs(e, f, 0, 1), dcm_dyad_probs(a, b, c, d), grm_dyad_probs(a, b, c, d, e),
              rcm_dyad_probs(a, b, e, c, d, g), fgrm_dyad_probs(e, g, a, b, c, d)}) {
            ASSERT_NEAR(total(p), 1.0, 1e-12);
            for (double x : {p.ij_only, p.ji_only, p.both, p.none}) {
                ASSERT_GE(x, 0.0);
                ASSERT_LE(x, 1.0);
            }
        }
    }
}

TEST(ModelProperties, FgrmAtUnitVIsFdcm) {
    Rng rng(42);
    for (int k = 0; k < 20000; ++k) {
        const FitnessData f{{positive(rng), positive(rng)}, {positive(rng), positive(rng)}, {}};
        const double u = positive(rng);
        const auto g = fgrm_dyad_probs(u, 1.0, f.assets[0], f.liabilities[0], f.assets[1], f.liabilities[1]);
        const auto h = fdcm_dyad_probs(u, f, 0, 1);
        ASSERT_NEAR(g.ij_only, h.ij_only, 1e-12);
        ASSERT_NEAR(g.ji_only, h.ji_only, 1e-12);
        ASSERT_NEAR(g.both, h.both, 1e-12);
        ASSERT_NEAR(g.none, h.none, 1e-12);
    }
}

TEST(ModelProperties, SwappingEndpointsSwapsDirectedOutcomes) {
    Rng rng(43);
    for (int k = 0; k < 5000; ++k) {
        const double a = positive(rng), b = positive(rng), c = positive(rng), d = positive(rng), e = positive(rng),
                     g = positive(rng);
        const FitnessData f{{a, c}, {b, d}, {}};
        const std::pair<DyadProbabilities, DyadProbabilities> pairs[] = {
            {fdcm_dyad_probs(e, f, 0, 1), fdcm_dyad_probs(e, f, 1, 0)},
            {dcm_dyad_probs(a, b, c, d), dcm_dyad_probs(c, d, a, b)},
            {grm_dyad_probs(a, b, c, d, e), grm_dyad_probs(c, d, a, b, e)},
            {rcm_dyad_probs(a, b, e, c, d, g), rcm_dyad_probs(c, d, g, a, b, e)},
            {fgrm_dyad_probs(e, g, a, b, c, d), fgrm_dyad_probs(e, g, c, d, a, b)}};
        for (const auto& [fw, bw] : pairs) {
            const auto s = bw.swapped();
            ASSERT_NEAR(fw.ij_only, s.ij_only, 1e-15);
            ASSERT_NEAR(fw.ji_only, s.ji_only, 1e-15);
            ASSERT_NEAR(fw.both, s.both, 1e-15);
            ASSERT_NEAR(fw.none, s.none, 1e-15);
        }
    }
}

TEST(ModelProperties, BidirectedProbabilityIncreasesWithV) {
    Rng rng(44);
    for (int k = 0; k < 2000; ++k) {
        const double u = std::exp(rng.normal()), a = std::exp(rng.normal()), b = std::exp(rng.normal()),
                     c = std::exp(rng.normal()), d = std::exp(rng.normal());
        double prev = -1.0;
        for (double v = 0.1; v < 10.0; v *= 1.3) {
            const double both = fgrm_dyad_probs(u, v, a, b, c, d).both;
            ASSERT_GT(both, prev);
            prev = both;
        }
    }
}

TEST(ModelProperties, GrmWithFitnessMultipliersIsFgrm) {
    Rng rng(45);
    for (int k = 0; k < 5000; ++k) {
        const double sb = std::exp(rng.normal()), sc = std::exp(rng.normal()), v = std::exp(rng.normal());
        const double ai = std::exp(rng.normal()), li = std::exp(rng.normal()), aj = std::exp(rng.normal()),
                     lj = std::exp(rng.normal());
        const auto g = grm_dyad_probs(sb * ai, sc * li, sb * aj, sc * lj, v);
        const auto f = fgrm_dyad_probs(sb * sc, v, ai, li, aj, lj);
        ASSERT_NEAR(g.ij_only, f.ij_only, 1e-14);
        ASSERT_NEAR(g.ji_only, f.ji_only, 1e-14);
        ASSERT_NEAR(g.both, f.both, 1e-14);
        ASSERT_NEAR(g.none, f.none, 1e-14);
    }
}

TEST(ModelProperties, OverflowGuardKeepsProbabilitiesFinite) {
    const auto d = fgrm_dyad_probs(1e200, 2.0, 1e150, 1.0, 1e150, 1.0);
    EXPECT_NEAR(total(d), 1.0, 1e-12);
    EXPECT_NEAR(d.both, 1.0, 1e-12);
    const auto r = rcm_dyad_probs(1e200, 1, 1e-5, 1, 1e200, 1e-5);
    EXPECT_NEAR(r.ij_only, 1.0, 1e-12);
    EXPECT_NEAR(fdcm_prob(1e200, 1e200, 1e10), 1.0, 1e-15);
    EXPECT_LE(fdcm_prob(1e200, 1e200, 1e10), 1.0);
    // Huge single direction, tiny other: no cancellation in the small term.
    const auto g = grm_dyad_probs(1e160, 1.0, 1e-3, 1e160, 1.0);
    EXPECT_NEAR(total(g), 1.0, 1e-12);
}

TEST(FittedModel, ZeroFitnessNodesNeverLink) {
    FitnessData f = support::unit_fitness(4);
    f.assets[2] = 0.0;
    f.liabilities[2] = 0.0;
    for (const auto& m : {FittedModel::fdcm(f, 3.0), FittedModel::fgrm(f, 3.0, 2.0)}) {
        for (std::size_t j = 0; j < 4; ++j)
            if (j != 2) {
                EXPECT_EQ(m.link_probability(2, j), 0.0);
                EXPECT_EQ(m.link_probability(j, 2), 0.0);
            }
        EXPECT_EQ(m.size(), 4u);
    }
}

TEST(FittedModel, ValidatesShapes) {
    EXPECT_THROW(FittedModel::dcm({1, 2}, {1}), Error);
    EXPECT_THROW(FittedModel::rcm({1, 2}, {1, 2}, {1}), Error);
    EXPECT_THROW(FittedModel::fgrm(support::unit_fitness(3), -1.0, 1.0), Error);
    FitnessData empty_assets = support::unit_fitness(3);
    empty_assets.assets.assign(3, 0.0);
    EXPECT_THROW(FittedModel::fdcm(empty_assets, 1.0), Error);
    const auto m = FittedModel::rcm({1, 2}, {1, 1}, {1, 1});
    expect_dyad(m.dyad(0, 1), 0.2, 0.4, 0.2, 0.2);
}

TEST(ModelKind, ParsesCommonSpellings) {
    EXPECT_EQ(parse_model_kind("F-GRM"), ModelKind::FGRM);
    EXPECT_EQ(parse_model_kind("fgrm"), ModelKind::FGRM);
    EXPECT_EQ(parse_model_kind("f_dcm"), ModelKind::FDCM);
    EXPECT_EQ(parse_model_kind("RCM"), ModelKind::RCM);
    for (auto k : {ModelKind::DCM, ModelKind::FDCM, ModelKind::GRM, ModelKind::RCM, ModelKind::FGRM})
        EXPECT_EQ(parse_model_kind(to_string(k)), k);
    EXPECT_THROW(parse_model_kind("ergm"), Error);
}
