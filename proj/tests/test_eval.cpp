#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "murreid/eval.hpp"
#include "murreid/rng.hpp"
#include "test_util.hpp"

using namespace murreid;

TEST_CASE("confusion") {
    SUBCASE("perfect predictions are diagonal") {
        std::vector<int> y{0, 1, 2, 1, 0};
        ConfusionMatrix cm = confusion(y, y, 3);
        for (size_t t = 0; t < 3; ++t)
            for (size_t p = 0; p < 3; ++p)
                CHECK(cm.at(t, p) == (t == p ? static_cast<int64_t>(std::count(y.begin(), y.end(),
                                                                               static_cast<int>(t)))
                                             : 0));
    }
    SUBCASE("empty input is a zero matrix") {
        ConfusionMatrix cm = confusion({}, {}, 4);
        CHECK(cm.total() == 0);
    }
    SUBCASE("pairs land in the right cells") {
        ConfusionMatrix cm = confusion({0, 0, 1}, {0, 1, 1}, 2);
        CHECK(cm.at(0, 0) == 1);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 1) == 1);
        CHECK(cm.at(1, 0) == 0);
    }
    SUBCASE("length mismatch throws") {
        CHECK_THROWS_AS(confusion({0}, {0, 1}, 2), std::invalid_argument);
    }
    SUBCASE("out-of-registry label throws") {
        CHECK_THROWS_AS(confusion({5}, {0}, 2), std::invalid_argument);
    }
    SUBCASE("evaluation order does not matter") {
        SplitMix64 rng(3);
        std::vector<int> truth, pred;
        for (int i = 0; i < 200; ++i) {
            truth.push_back(static_cast<int>(rng.below(5)));
            pred.push_back(static_cast<int>(rng.below(5)));
        }
        ConfusionMatrix a = confusion(truth, pred, 5);
        std::vector<size_t> order(truth.size());
        std::iota(order.begin(), order.end(), size_t{0});
        shuffle(order, rng);
        std::vector<int> truth2, pred2;
        for (size_t i : order) {
            truth2.push_back(truth[i]);
            pred2.push_back(pred[i]);
        }
        ConfusionMatrix b = confusion(truth2, pred2, 5);
        CHECK(a.counts == b.counts);
    }
}

TEST_CASE("metrics") {
    SUBCASE("TP=3, FP=2, FN=1 gives precision 0.6, recall 0.75, F1 2/3") {
        // class 0: 3 true positives, 2 false positives, 1 false negative
        std::vector<int> truth{0, 0, 0, 0, 1, 1, 1};
        std::vector<int> pred{0, 0, 0, 1, 0, 0, 1};
        ConfusionMatrix cm = confusion(truth, pred, 2);
        EvalReport rep = metrics(cm);
        CHECK(rep.precision[0] == doctest::Approx(0.6));
        CHECK(rep.recall[0] == doctest::Approx(0.75));
        CHECK(rep.f1[0] == doctest::Approx(2.0 / 3.0));

        auto oracle = testutil::brute_force_metrics(truth, pred, 2);
        for (size_t k = 0; k < 2; ++k) {
            CHECK(rep.precision[k] == doctest::Approx(oracle.precision[k]).epsilon(1e-12));
            CHECK(rep.recall[k] == doctest::Approx(oracle.recall[k]).epsilon(1e-12));
            CHECK(rep.f1[k] == doctest::Approx(oracle.f1[k]).epsilon(1e-12));
        }
        CHECK(rep.accuracy == doctest::Approx(oracle.accuracy).epsilon(1e-12));
    }
    SUBCASE("all-correct predictions score 1 everywhere") {
        std::vector<int> y{0, 1, 2, 2, 1, 0};
        EvalReport rep = metrics(confusion(y, y, 3));
        CHECK(rep.accuracy == doctest::Approx(1.0));
        for (size_t k = 0; k < 3; ++k) {
            CHECK(rep.precision[k] == doctest::Approx(1.0));
            CHECK(rep.recall[k] == doctest::Approx(1.0));
            CHECK(rep.f1[k] == doctest::Approx(1.0));
        }
    }
    SUBCASE("a class never predicted and never true scores 0 by the 0/0 rule") {
        EvalReport rep = metrics(confusion({0}, {0}, 3));
        CHECK(rep.precision[2] == 0.0);
        CHECK(rep.recall[2] == 0.0);
        CHECK(rep.f1[2] == 0.0);
    }
    SUBCASE("empty matrix gives zero accuracy") {
        EvalReport rep = metrics(ConfusionMatrix(3));
        CHECK(rep.accuracy == 0.0);
    }
    SUBCASE("identity property: metrics(confusion(y, y)) is perfect for any y") {
        SplitMix64 rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            const size_t n = 1 + rng.below(60);
            std::vector<int> y(n);
            for (int& v : y) v = static_cast<int>(rng.below(23));
            EvalReport rep = metrics(confusion(y, y, 23));
            CHECK(rep.accuracy == doctest::Approx(1.0));
            for (size_t k = 0; k < 23; ++k) {
                const bool present = std::count(y.begin(), y.end(), static_cast<int>(k)) > 0;
                CHECK(rep.f1[k] == doctest::Approx(present ? 1.0 : 0.0));
            }
        }
    }
    SUBCASE("support sums to the input length and macro scores stay in [0,1]") {
        SplitMix64 rng(8);
        std::vector<int> truth, pred;
        for (int i = 0; i < 500; ++i) {
            truth.push_back(static_cast<int>(rng.below(23)));
            pred.push_back(static_cast<int>(rng.below(23)));
        }
        EvalReport rep = metrics(confusion(truth, pred, 23));
        int64_t total = 0;
        for (auto s : rep.support) total += s;
        CHECK(total == 500);
        CHECK(rep.macro_f1 >= 0.0);
        CHECK(rep.macro_f1 <= 1.0);
    }
}

TEST_CASE("round_half_even follows the decimal rule") {
    CHECK(round_half_even(0.675, 2) == "0.68");
    CHECK(round_half_even(0.685, 2) == "0.68");
    CHECK(round_half_even(0.665, 2) == "0.66");
    CHECK(round_half_even(0.97, 2) == "0.97");
    CHECK(round_half_even(0.8, 2) == "0.80");
    CHECK(round_half_even(0.124, 2) == "0.12");
    CHECK(round_half_even(0.126, 2) == "0.13");
    CHECK(round_half_even(0.0, 2) == "0.00");
    CHECK(round_half_even(1.0, 2) == "1.00");
}

TEST_CASE("render_report") {
    const LabelRegistry& reg = LabelRegistry::finnish();
    SUBCASE("rows carry the code and 2-decimal metrics in registry order") {
        EvalReport rep;
        rep.precision.assign(23, 0.0);
        rep.recall.assign(23, 0.0);
        rep.f1.assign(23, 0.0);
        rep.support.assign(23, 0);
        rep.precision[0] = 0.97;
        rep.recall[0] = 0.89;
        rep.f1[0] = 0.93;
        rep.support[0] = 120;
        rep.accuracy = 0.85;

        std::string out = render_report(rep, reg, ReportStyle::Tsv);
        CHECK(out.find("dialect\tprecision\trecall\tf1\tsupport\n") == 0);
        CHECK(out.find("EH\t0.97\t0.89\t0.93\t120\n") != std::string::npos);
        CHECK(out.find("# accuracy=0.85") != std::string::npos);

        // one line per dialect plus header and footer
        CHECK(std::count(out.begin(), out.end(), '\n') == 25);
    }
    SUBCASE("an all-zero report renders rows of 0.00") {
        EvalReport rep = metrics(ConfusionMatrix(23));
        std::string out = render_report(rep, reg, ReportStyle::Tsv);
        CHECK(out.find("KH\t0.00\t0.00\t0.00\t0\n") != std::string::npos);
    }
    SUBCASE("full precision mode keeps the exact ratios") {
        EvalReport rep = metrics(ConfusionMatrix(23));
        rep.precision.assign(23, 0.0);
        rep.precision[0] = 2.0 / 3.0;
        std::string out = render_report(rep, reg, ReportStyle::Tsv, true);
        CHECK(out.find("0.6666666666666666") != std::string::npos);
    }
    SUBCASE("table style renders a fixed-width header") {
        EvalReport rep = metrics(ConfusionMatrix(23));
        std::string out = render_report(rep, reg, ReportStyle::Table);
        CHECK(out.find("dialect") != std::string::npos);
        CHECK(out.find("accuracy") != std::string::npos);
    }
}
