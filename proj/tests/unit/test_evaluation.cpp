#include "motioncloud/error.hpp"
#include "motioncloud/evaluation.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace motioncloud;

TEST_SUITE("evaluation") {
    TEST_CASE("a perfect classifier gives an identity matrix in percent") {
        const std::vector<std::string> classes{"a", "b", "c"};
        const std::vector<std::string> truth{"a", "b", "c", "c", "a"};
        const auto cm = confusion_matrix(truth, truth, classes);
        CHECK(cm.percent.isApprox(100.0 * Eigen::MatrixXd::Identity(3, 3)));
        CHECK(cm.counts(2, 2) == 2);
        CHECK(cm.accuracy() == 100.0);
    }

    TEST_CASE("the Run row: 0, 0, 0, 14.1, 83.8, 2.1") {
        const std::vector<std::string> classes{"bend", "jack", "jump", "walk", "run", "skip"};
        std::vector<std::string> truth(142, "run");
        std::vector<std::string> pred;
        pred.insert(pred.end(), 20, "walk");
        pred.insert(pred.end(), 119, "run");
        pred.insert(pred.end(), 3, "skip");
        for (const auto& c : classes) {
            if (c == "run") continue;
            truth.push_back(c);
            pred.push_back(c);
        }
        const auto cm = confusion_matrix(pred, truth, classes);
        const Eigen::RowVectorXd row = cm.percent.row(4);
        CHECK(row(0) == 0.0);
        CHECK(row(1) == 0.0);
        CHECK(row(2) == 0.0);
        CHECK(row(3) == doctest::Approx(14.1).epsilon(0.05 / 14.1));
        CHECK(row(4) == doctest::Approx(83.8).epsilon(0.05 / 83.8));
        CHECK(row(5) == doctest::Approx(2.1).epsilon(0.05 / 2.1));
        CHECK(row.sum() == doctest::Approx(100.0));
    }

    TEST_CASE("property: rows sum to 100 and accuracy matches the label agreement") {
        mctest::SplitMix rng(90);
        const std::vector<std::string> classes{"p", "q", "r", "s"};
        for (int trial = 0; trial < 100; ++trial) {
            const int n = rng.integer(8, 200);
            std::vector<std::string> truth, pred;
            for (const auto& c : classes) truth.push_back(c);
            while (static_cast<int>(truth.size()) < n) truth.push_back(classes[rng.integer(0, 3)]);
            int agree = 0;
            for (const auto& t : truth) {
                pred.push_back(rng.uniform() < 0.6 ? t : classes[rng.integer(0, 3)]);
                agree += pred.back() == t;
            }
            const auto cm = confusion_matrix(pred, truth, classes);
            for (Eigen::Index r = 0; r < 4; ++r) CHECK(cm.percent.row(r).sum() == doctest::Approx(100.0));
            CHECK(cm.counts.sum() == static_cast<int>(truth.size()));
            CHECK(cm.accuracy() == doctest::Approx(100.0 * agree / truth.size()));
        }
    }

    TEST_CASE("confusion matrix preconditions") {
        const std::vector<std::string> classes{"a", "b"};
        const std::vector<std::string> only_a{"a", "a"};
        CHECK_THROWS_WITH_AS(confusion_matrix(only_a, only_a, classes), doctest::Contains("'b'"), InvalidArgument);
        const std::vector<std::string> one{"a"};
        CHECK_THROWS_AS(confusion_matrix(one, only_a, classes), InvalidArgument);
        const std::vector<std::string> unknown{"a", "z"};
        const std::vector<std::string> ab{"a", "b"};
        CHECK_THROWS_AS(confusion_matrix(unknown, ab, classes), InvalidArgument);
        const std::vector<std::string> dup{"a", "a"};
        CHECK_THROWS_AS(confusion_matrix(ab, ab, dup), InvalidArgument);
        CHECK_THROWS_AS(confusion_matrix(ab, ab, std::vector<std::string>{}), InvalidArgument);
    }

    TEST_CASE("separation factor against hand sums") {
        Eigen::MatrixXd lin(3, 2);
        lin << 0, 0, 3, 4, 0, 0;
        const std::vector<std::string> labels{"a", "b", "a"};
        // two a-b pairs at distance 5
        SUBCASE("kernel space twice as spread") {
            const auto rep = separation_report(lin, 2.0 * lin, labels);
            CHECK(rep.linear_max == doctest::Approx(10.0));
            CHECK(rep.kernel_max == doctest::Approx(20.0));
            CHECK(rep.ratio == doctest::Approx(2.0));
            CHECK(rep.factor == doctest::Approx(2.0));
        }
        SUBCASE("kernel space compressed") {
            const auto rep = separation_report(lin, 0.25 * lin, labels);
            CHECK(rep.ratio == doctest::Approx(0.25));
            CHECK(rep.factor == doctest::Approx(4.0));
        }
        SUBCASE("errors") {
            CHECK_THROWS_AS(separation_report(lin, lin, std::vector<std::string>{"a", "a", "a"}), InvalidArgument);
            CHECK_THROWS_AS(separation_report(lin, lin.topRows(2), labels), InvalidArgument);
            const Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(3, 2);
            CHECK_THROWS_AS(separation_report(flat, lin, labels), NumericalError);
        }
    }

    TEST_CASE("property: separation pair sums are symmetric with an empty diagonal") {
        mctest::SplitMix rng(91);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = rng.integer(6, 30);
            const Eigen::MatrixXd a = mctest::random_matrix(rng, n, 3);
            const Eigen::MatrixXd b = mctest::random_matrix(rng, n, 3);
            std::vector<std::string> labels;
            for (int i = 0; i < n; ++i) labels.push_back(i < 3 ? std::string(1, static_cast<char>('x' + i))
                                                               : std::string(1, static_cast<char>('x' + rng.integer(0, 2))));
            const auto rep = separation_report(a, b, labels);
            CHECK(rep.linear_sums.isApprox(rep.linear_sums.transpose()));
            CHECK(rep.kernel_sums.diagonal().cwiseAbs().maxCoeff() == 0.0);
            CHECK(rep.factor >= 1.0);
        }
    }

    TEST_CASE("leave-one-clip-per-class-out comparison") {
        const auto cfg = mctest::small_config();
        const auto spec = mctest::small_spec();
        std::vector<ClipFeatures> clips;
        for (auto kind : spec.classes) {
            for (int c = 0; c < spec.clips_per_class; ++c) {
                clips.push_back(extract_features(render_clip(kind, c, spec), cfg, to_string(kind) + std::to_string(c),
                                                 to_string(kind)));
            }
        }
        const auto cmp = compare_classifiers(clips, cfg);
        CHECK(cmp.folds == 2);
        REQUIRE(cmp.truths.size() == 8);
        CHECK(cmp.tpc_predictions.size() == 8);
        CHECK(cmp.knn_predictions.size() == 8);
        const auto classes = cmp.tpc.classes;
        for (const auto& p : cmp.tpc_predictions) CHECK(std::count(classes.begin(), classes.end(), p) == 1);
        CHECK(cmp.tpc_accuracy == doctest::Approx(cmp.tpc.accuracy()));
        CHECK(cmp.knn_accuracy == doctest::Approx(cmp.knn.accuracy()));

        std::vector<ClipFeatures> singles;
        for (std::size_t i = 0; i < clips.size(); i += 2) singles.push_back(clips[i]);
        CHECK_THROWS_AS(compare_classifiers(singles, cfg), InvalidArgument);
        CHECK_THROWS_AS(compare_classifiers(std::vector<ClipFeatures>{}, cfg), InvalidArgument);
    }
}
