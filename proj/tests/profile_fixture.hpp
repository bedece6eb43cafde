#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "attnet/profile.hpp"
#include "attnet/rng.hpp"

namespace attnet::test {

// Fifteen communities A..O in the target grouping:
// [E,N,A,O,B,G] [I,J,D,M] [F,L,H,C,K], with B and G leaving the first
// cluster as sci-health.
struct ProfileFixture {
  std::vector<std::string> labels;
  std::vector<FeatureRow> raw;
  std::vector<SuperCommunity> truth;
};

inline ProfileFixture grouping_fixture() {
  using S = SuperCommunity;
  // Science, Healthcare, Media, Gov & Politics, Public Services,
  // Political Supporter, Internationality.
  const FeatureRow other{0.010, 0.010, 0.030, 0.010, 0.008, 0.010, 2.60};
  const FeatureRow sci{0.016, 0.014, 0.032, 0.010, 0.008, 0.009, 2.65};
  const FeatureRow elite{0.015, 0.030, 0.140, 0.080, 0.060, 0.010, 0.40};
  const FeatureRow political{0.005, 0.005, 0.030, 0.040, 0.006, 0.200, 0.80};

  ProfileFixture fx;
  const std::string pattern = "OSPEOPSPEEPPEOO";  // letters A..O
  Rng rng(2020);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const FeatureRow* base = nullptr;
    S name = S::kOther;
    switch (pattern[i]) {
      case 'O': base = &other; name = S::kOther; break;
      case 'S': base = &sci; name = S::kInternationalSciHealth; break;
      case 'E': base = &elite; name = S::kNationalElite; break;
      default: base = &political; name = S::kPolitical; break;
    }
    FeatureRow r = *base;
    for (auto& v : r) v *= 1.0 + 0.05 * (rng.uniform() - 0.5);
    fx.labels.push_back(std::string(1, static_cast<char>('A' + i)));
    fx.raw.push_back(r);
    fx.truth.push_back(name);
  }
  return fx;
}

// Independent reading of the naming text, applied to a group's mean Z.
inline SuperCommunity evaluate_rules(const FeatureRow& z) {
  const bool sci = z[0] > 0, health = z[1] > 0, media = z[2] > 0, gov = z[3] > 0,
             pub = z[4] > 0, sup = z[5] > 0, intl = z[6] > 0;
  std::vector<SuperCommunity> hits;
  if ((sci || health) && intl) hits.push_back(SuperCommunity::kInternationalSciHealth);
  if ((health || media || gov || pub) && !intl && !sup) hits.push_back(SuperCommunity::kNationalElite);
  if (sup || (gov && !health && !media && !pub)) hits.push_back(SuperCommunity::kPolitical);
  if (!sci && !health && !media && !gov && !pub && !sup) hits.push_back(SuperCommunity::kOther);
  if (hits.empty()) return SuperCommunity::kOther;
  return *std::min_element(hits.begin(), hits.end());  // enum order is the precedence
}

}  // namespace attnet::test
