// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include "property_checks.hpp"

namespace {

void expect_property(const llob::props::PropertyResult& r) {
  EXPECT_EQ(r.cases, llob::props::kCases) << r.name;
  EXPECT_LE(r.worst, r.tolerance) << r.name << ": worst error " << r.worst;
}

TEST(Properties, MassConservationUnderPureDiffusion) { expect_property(llob::props::mass_conservation()); }
TEST(Properties, BuySellAntisymmetry) { expect_property(llob::props::buy_sell_antisymmetry()); }
TEST(Properties, StationaryBookIsFixedPoint) { expect_property(llob::props::fixed_point()); }
TEST(Properties, KernelRoundTrip) { expect_property(llob::props::kernel_round_trip()); }
TEST(Properties, PropagatorLinearity) { expect_property(llob::props::propagator_linearity()); }
TEST(Properties, PropagatorCausality) { expect_property(llob::props::propagator_causality()); }
TEST(Properties, SeedDeterminism) { expect_property(llob::props::seed_determinism()); }

}  // namespace
