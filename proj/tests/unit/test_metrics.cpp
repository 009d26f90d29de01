#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kpiguard/metrics.hpp"
#include "kpiguard/rng.hpp"

using namespace kpiguard;

TEST_CASE("rates from a filled confusion matrix") {
  ConfusionMatrix cm{99, 0, 100, 1};
  const Rates r = compute_metrics(cm);
  CHECK(r.detection_rate.value() == doctest::Approx(0.99));
  CHECK(r.false_positive_rate.value() == doctest::Approx(0.0));
  CHECK(r.false_negative_rate.value() == doctest::Approx(0.01));
}

TEST_CASE("zero denominators yield the undefined marker") {
  ConfusionMatrix cm{0, 5, 10, 0};  // no positives at all
  const Rates r = compute_metrics(cm);
  CHECK_FALSE(r.detection_rate.has_value());
  CHECK_FALSE(r.false_negative_rate.has_value());
  CHECK(r.false_positive_rate.has_value());
  CHECK(rate_to_string(r.detection_rate) == "NA");

  ConfusionMatrix no_neg{3, 0, 0, 2};
  CHECK_FALSE(compute_metrics(no_neg).false_positive_rate.has_value());
}

TEST_CASE("DR + FNR = 1 whenever positives exist") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    ConfusionMatrix cm{
        static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{1000})),
        static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{1000})),
        static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{1000})),
        static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{1000}))};
    if (cm.tp + cm.fn == 0) continue;
    const Rates r = compute_metrics(cm);
    CHECK(*r.detection_rate + *r.false_negative_rate ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*r.detection_rate >= 0.0);
    CHECK(*r.detection_rate <= 1.0);
  }
}

TEST_CASE("add classifies into the four cells") {
  ConfusionMatrix cm;
  cm.add(Label::kPoisoned, Label::kPoisoned);
  cm.add(Label::kPoisoned, Label::kBenign);
  cm.add(Label::kBenign, Label::kPoisoned);
  cm.add(Label::kBenign, Label::kBenign);
  CHECK(cm.tp == 1);
  CHECK(cm.fn == 1);
  CHECK(cm.fp == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.total() == 4);
}

TEST_CASE("rate formatting uses six decimals") {
  CHECK(rate_to_string(std::optional<double>{0.5}) == "0.500000");
  CHECK(rate_to_string(std::nullopt) == "NA");
}
