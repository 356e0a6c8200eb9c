#include <sstream>

#include <gtest/gtest.h>

#include "lcs/config.hpp"
#include "lcs/trust.hpp"
#include "lcs/types.hpp"

using namespace lcs;

TEST(TrustInit, NormalEdgeRoundsHalfUp)
{
    EXPECT_EQ(trust_init(EntityClass::normal_edge, {2, 3, 5}), 3);
    EXPECT_EQ(trust_init(EntityClass::normal_circle, {2, 3, 5}), 3);
    EXPECT_EQ(trust_init(EntityClass::normal_edge, {2, 4, 5}), 3);
}

TEST(TrustInit, SquareStartsAtStandard) { EXPECT_EQ(trust_init(EntityClass::square, {3, 5, 7}), 5); }

TEST(TrustInit, RebelStartsAboveStandard) { EXPECT_EQ(trust_init(EntityClass::rebel, {2, 3, 5}), 4); }

TEST(TrustInit, RejectsInvalidLadder)
{
    EXPECT_THROW(trust_init(EntityClass::square, {3, 3, 5}), std::invalid_argument);
    EXPECT_THROW(trust_init(EntityClass::square, {1, 4, 3}), std::invalid_argument);
}

TEST(TrustCommit, ClampsAtMaximum) { EXPECT_EQ(trust_commit(5, +1, {2, 3, 5}), 5); }

TEST(TrustCommit, PrunesBelowCritical) { EXPECT_FALSE(trust_commit(2, -1, {2, 3, 5}).has_value()); }

TEST(TrustCommit, OrdinaryIncrement) { EXPECT_EQ(trust_commit(3, +1, {2, 3, 5}), 4); }

TEST(TrustCommit, IdempotentAtCap)
{
    const TrustLadder ladder{2, 3, 5};
    int t = ladder.tr_m;
    for (int k = 0; k < 20; ++k) {
        t = *trust_commit(t, +1, ladder);
        EXPECT_EQ(t, ladder.tr_m);
    }
}

TEST(TrustCommit, ResultAlwaysInsideLadder)
{
    const TrustLadder ladder{3, 5, 7};
    for (int t = ladder.tr_c; t <= ladder.tr_m; ++t)
        for (int d : {-1, +1})
            if (auto next = trust_commit(t, d, ladder)) EXPECT_TRUE(ladder.contains(*next));
}

TEST(WrapDeg, RangeIsHalfOpen)
{
    EXPECT_DOUBLE_EQ(wrap_deg(180.0), 180.0);
    EXPECT_DOUBLE_EQ(wrap_deg(-180.0), 180.0);
    EXPECT_DOUBLE_EQ(wrap_deg(190.0), -170.0);
    EXPECT_DOUBLE_EQ(wrap_deg(-190.0), 170.0);
    EXPECT_DOUBLE_EQ(wrap_deg(720.0), 0.0);
}

TEST(Config, DefaultsMatchLabTable)
{
    const FilterConfig c;
    EXPECT_EQ(c.circle_trust.tr_c, 2);
    EXPECT_EQ(c.circle_trust.tr_s, 3);
    EXPECT_EQ(c.circle_trust.tr_m, 5);
    EXPECT_EQ(c.square_trust.tr_c, 3);
    EXPECT_EQ(c.square_trust.tr_s, 5);
    EXPECT_EQ(c.square_trust.tr_m, 7);
    EXPECT_DOUBLE_EQ(c.delta_v, 9.0);
    EXPECT_DOUBLE_EQ(c.delta_beta_1, 90.0);
    EXPECT_DOUBLE_EQ(c.mu_0, 25.0);
    EXPECT_DOUBLE_EQ(c.rho_c, 40.0);
    EXPECT_DOUBLE_EQ(c.eps_beta_n, 20.0);
    EXPECT_DOUBLE_EQ(c.eps_beta_r, 50.0);
    EXPECT_DOUBLE_EQ(c.eps_v, 0.7);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, RoundTripsThroughText)
{
    FilterConfig c;
    c.eps_beta_n = 17.25;
    c.psi_lifetime = 3;
    c.use_verbatim_eq1 = true;
    c.camera.f = 612.5;
    std::stringstream ss;
    write_config(ss, c);
    const FilterConfig back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    std::stringstream first;
    write_config(first, c);
    EXPECT_EQ(first.str(), again.str());
    EXPECT_DOUBLE_EQ(back.eps_beta_n, 17.25);
    EXPECT_EQ(back.psi_lifetime, 3);
    EXPECT_TRUE(back.use_verbatim_eq1);
}

TEST(Config, ParsesCommentsAndBlankLines)
{
    std::istringstream in("# lab\n\n eps_beta_n = 12 \nrho_c=55\n");
    const FilterConfig c = parse_config(in);
    EXPECT_DOUBLE_EQ(c.eps_beta_n, 12.0);
    EXPECT_DOUBLE_EQ(c.rho_c, 55.0);
}

TEST(Config, RejectsUnknownKeyWithLineNumber)
{
    std::istringstream in("rho_c=40\nbogus=1\n");
    try {
        parse_config(in);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Config, RejectsInvalidValues)
{
    for (const char* text : {"rho_c=0", "rho_c=101", "psi_lifetime=0", "delta_v=-1", "f=0", "tr_c_c=3", "mu_0=abc",
                             "o_i_x=1000"}) {
        std::istringstream in(text);
        EXPECT_THROW(parse_config(in), ConfigError) << text;
    }
}
