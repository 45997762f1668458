#include "motioncloud/error.hpp"
#include "motioncloud/indexer.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>

using namespace motioncloud;

namespace {

void check_same(const IndexRecord& a, const IndexRecord& b) {
    CHECK(a.video_id == b.video_id);
    CHECK(a.start_frame == b.start_frame);
    CHECK(a.end_frame == b.end_frame);
    CHECK(a.null == b.null);
    CHECK(a.predicted == b.predicted);
    REQUIRE(a.signature.centroid.size() == b.signature.centroid.size());
    CHECK((a.signature.centroid - b.signature.centroid).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(a.signature.mean_radius - b.signature.mean_radius) <= 1e-6);
    REQUIRE(a.signature.plane_defined() == b.signature.plane_defined());
    if (a.signature.plane_defined()) {
        CHECK((*a.signature.mean_binormal - *b.signature.mean_binormal).cwiseAbs().maxCoeff() <= 1e-6);
    }
    REQUIRE(a.signature.segments.size() == b.signature.segments.size());
    for (std::size_t i = 0; i < a.signature.segments.size(); ++i) {
        const auto& p = a.signature.segments[i];
        const auto& q = b.signature.segments[i];
        CHECK(std::abs(p.mean_curvature - q.mean_curvature) <= 1e-6 * std::max(1.0, std::abs(p.mean_curvature)));
        CHECK(std::abs(p.mean_torsion - q.mean_torsion) <= 1e-6 * std::max(1.0, std::abs(p.mean_torsion)));
        CHECK((p.tangent - q.tangent).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(p.valid == q.valid);
    }
    REQUIRE(a.scores.size() == b.scores.size());
    for (const auto& [k, v] : a.scores) CHECK(std::abs(b.scores.at(k) - v) <= 1e-6 * std::max(1.0, std::abs(v)));
}

}  // namespace

TEST_SUITE("indexer") {
    TEST_CASE("window arithmetic") {
        const auto w = window_ranges(400, {250, 50});
        REQUIRE(w.size() == 4);
        CHECK(w[0] == std::pair{0, 250});
        CHECK(w[1] == std::pair{50, 300});
        CHECK(w[2] == std::pair{100, 350});
        CHECK(w[3] == std::pair{150, 400});
        const auto s = window_ranges(100, {250, 50});
        REQUIRE(s.size() == 1);
        CHECK(s[0] == std::pair{0, 100});
        CHECK_THROWS_AS(window_ranges(100, {50, 50}), InvalidArgument);
        CHECK_THROWS_AS(window_ranges(1, {250, 50}), InvalidArgument);
    }

    TEST_CASE("property: windows tile the video with the given stride") {
        mctest::SplitMix rng(60);
        for (int trial = 0; trial < 200; ++trial) {
            const int stride = rng.integer(1, 40);
            const int window = stride + rng.integer(1, 200);
            const int frames = rng.integer(2, 1000);
            const auto w = window_ranges(frames, {window, stride});
            REQUIRE(!w.empty());
            for (std::size_t i = 0; i < w.size(); ++i) {
                CHECK(w[i].second - w[i].first <= window);
                CHECK(w[i].second <= frames);
                if (i > 0) CHECK(w[i].first - w[i - 1].first == stride);
            }
            if (frames >= window) CHECK(w.back().first + stride + window > frames);
        }
    }

    TEST_CASE("a 400-frame video yields four records that round-trip") {
        const auto& model = mctest::small_model();
        const FrameSequence video = mctest::timeline({ActionKind::wave, ActionKind::run}, 200);
        const auto records = index_timeline("film", video, model, {250, 50});
        REQUIRE(records.size() == 4);
        for (const auto& r : records) {
            CHECK(r.end_frame - r.start_frame == 250);
            for (const auto& [label, pct] : r.similarity) {
                CHECK(pct >= 0.0);
                CHECK(pct <= 100.0);
            }
        }
        mctest::ScratchDir dir("index");
        save_index(records, dir.path / "idx.jsonl", static_cast<int>(model.eigen.dims()));
        const auto back = load_index(dir.path / "idx.jsonl");
        REQUIRE(back.size() == records.size());
        for (std::size_t i = 0; i < back.size(); ++i) check_same(records[i], back[i]);

        SUBCASE("querying an indexed window with its own frames ranks it first at 100%") {
            FrameSequence clip;
            clip.frames.assign(video.frames.begin() + 100, video.frames.begin() + 350);
            const QueryResult q = query_similarity(clip, model, back, 10, {});
            REQUIRE_FALSE(q.null_query);
            REQUIRE(!q.hits.empty());
            CHECK(q.hits[0].start_frame == 100);
            CHECK(q.hits[0].end_frame == 350);
            CHECK(q.hits[0].similarity == doctest::Approx(100.0).epsilon(1e-6));
            for (std::size_t i = 1; i < q.hits.size(); ++i) CHECK(q.hits[i].similarity <= q.hits[i - 1].similarity);
        }
    }

    TEST_CASE("a short video gets one window") {
        const auto& model = mctest::small_model();
        const auto records = index_timeline("short", mctest::timeline({ActionKind::walk}, 100), model, {250, 50});
        REQUIRE(records.size() == 1);
        CHECK(records[0].start_frame == 0);
        CHECK(records[0].end_frame == 100);
    }

    TEST_CASE("a static video is null everywhere and static queries are null") {
        const auto& model = mctest::small_model();
        const FrameSequence still = render_static_clip(300, {128, 128}, 3);
        const auto records = index_timeline("still", still, model, {250, 50});
        REQUIRE(records.size() == 2);
        for (const auto& r : records) {
            CHECK(r.null);
            CHECK(r.predicted.empty());
        }
        const auto moving = index_timeline("moving", mctest::timeline({ActionKind::wave}, 100), model, {250, 50});
        const QueryResult q = query_similarity(render_static_clip(30, {128, 128}, 4), model, moving, 5, {});
        CHECK(q.null_query);
        CHECK(q.hits.empty());
    }

    TEST_CASE("top_k truncates and the order is non-increasing") {
        const auto& model = mctest::small_model();
        std::vector<IndexRecord> index;
        for (auto kind : {ActionKind::wave, ActionKind::bounce, ActionKind::walk, ActionKind::run}) {
            auto recs = index_timeline(to_string(kind), mctest::timeline({kind}, 60, 3), model, {30, 15});
            index.insert(index.end(), recs.begin(), recs.end());
        }
        REQUIRE(index.size() >= 10);
        index.resize(10);
        const QueryResult q = query_similarity(mctest::timeline({ActionKind::bounce}, 40, 9), model, index, 3, {});
        REQUIRE(q.hits.size() == 3);
        for (std::size_t i = 1; i < q.hits.size(); ++i) CHECK(q.hits[i].similarity <= q.hits[i - 1].similarity);
    }

    TEST_CASE("query preconditions") {
        const auto& model = mctest::small_model();
        const std::vector<IndexRecord> empty;
        CHECK_THROWS_AS(query_similarity(mctest::timeline({ActionKind::wave}, 20), model, empty, 3, {}), InvalidArgument);
        const auto index = index_timeline("v", mctest::timeline({ActionKind::wave}, 40), model, {30, 10});
        CHECK_THROWS_AS(query_similarity(mctest::timeline({ActionKind::wave}, 5), model, index, 3, {}), InvalidArgument);
    }

    TEST_CASE("empty index files are valid; damaged files name the line") {
        mctest::ScratchDir dir("index_io");
        save_index(std::vector<IndexRecord>{}, dir.path / "empty.jsonl", 10);
        CHECK(load_index(dir.path / "empty.jsonl").empty());

        const auto& model = mctest::small_model();
        const auto records = index_timeline("v", mctest::timeline({ActionKind::walk}, 60), model, {30, 10});
        save_index(records, dir.path / "ok.jsonl", static_cast<int>(model.eigen.dims()));
        std::ifstream in(dir.path / "ok.jsonl");
        std::string header, first, second;
        std::getline(in, header);
        std::getline(in, first);
        std::getline(in, second);
        {
            std::ofstream out(dir.path / "cut.jsonl");
            out << header << '\n' << first << '\n' << second.substr(0, second.size() / 2) << '\n';
        }
        CHECK_THROWS_WITH_AS(load_index(dir.path / "cut.jsonl"), doctest::Contains("cut.jsonl:3"), IoError);
        {
            std::ofstream out(dir.path / "v2.jsonl");
            out << R"({"format":"mcidx","version":2,"K":6})" << '\n';
        }
        CHECK_THROWS_WITH_AS(load_index(dir.path / "v2.jsonl"), doctest::Contains("version"), IoError);
        CHECK_THROWS_AS(load_index(dir.path / "missing.jsonl"), IoError);
    }

    TEST_CASE("annotation counts reproduce the Walk row: 29/54/13/8") {
        // 104 one-frame windows; the first 37 frames are walk
        std::vector<IndexRecord> recs(104);
        const std::vector<LabeledInterval> truth{{"film", 0, 37, "walk"}};
        for (int i = 0; i < 104; ++i) {
            recs[static_cast<std::size_t>(i)].video_id = "film";
            recs[static_cast<std::size_t>(i)].start_frame = i;
            recs[static_cast<std::size_t>(i)].end_frame = i + 1;
            const bool walk_truth = i < 37;
            const bool predict_walk = walk_truth ? i < 29 : i < 37 + 13;
            recs[static_cast<std::size_t>(i)].predicted = predict_walk ? "walk" : "run";
        }
        const std::vector<std::string> classes{"run", "walk"};
        const auto counts = annotate_intervals(recs, truth, classes);
        const BinaryCounts& w = counts.at("walk");
        CHECK(w.tp == 29);
        CHECK(w.tn == 54);
        CHECK(w.fp == 13);
        CHECK(w.fn == 8);
        CHECK(w.tpr() == doctest::Approx(0.78).epsilon(0.005 / 0.78));
        CHECK(w.tnr() == doctest::Approx(0.81).epsilon(0.005 / 0.81));
    }

    TEST_CASE("annotation: perfect predictions, absent classes, 50% rule, contradictions") {
        std::vector<IndexRecord> recs(4);
        for (int i = 0; i < 4; ++i) {
            recs[static_cast<std::size_t>(i)].video_id = "v";
            recs[static_cast<std::size_t>(i)].start_frame = 10 * i;
            recs[static_cast<std::size_t>(i)].end_frame = 10 * i + 10;
            recs[static_cast<std::size_t>(i)].predicted = i < 2 ? "wave" : "run";
        }
        const std::vector<LabeledInterval> truth{{"v", 0, 20, "wave"}, {"v", 20, 40, "run"}};
        const std::vector<std::string> classes{"bounce", "run", "wave"};
        const auto c = annotate_intervals(recs, truth, classes);
        for (const auto& name : {"run", "wave"}) {
            CHECK(c.at(name).fp == 0);
            CHECK(c.at(name).fn == 0);
            CHECK(c.at(name).tpr() == 1.0);
            CHECK(c.at(name).tnr() == 1.0);
        }
        CHECK(c.at("bounce").tn == 4);

        // exactly half of the window overlaps
        const std::vector<LabeledInterval> half{{"v", 5, 15, "wave"}};
        CHECK(annotate_intervals(std::span(recs).subspan(0, 1), half, classes).at("wave").tp == 1);
        // overlapping same-label intervals are not double counted
        const std::vector<LabeledInterval> dup{{"v", 0, 3, "wave"}, {"v", 0, 3, "wave"}};
        CHECK(annotate_intervals(std::span(recs).subspan(0, 1), dup, classes).at("wave").fp == 1);

        const std::vector<LabeledInterval> clash{{"v", 0, 20, "wave"}, {"v", 10, 30, "run"}};
        CHECK_THROWS_AS(annotate_intervals(recs, clash, classes), InvalidArgument);
    }

    TEST_CASE("model save/load keeps classification intact") {
        const auto& model = mctest::small_model();
        mctest::ScratchDir dir("model");
        save_action_model(model, dir.path);
        const ActionModel back = load_action_model(dir.path);
        CHECK(back.clouds.size() == model.clouds.size());
        CHECK(back.classes() == model.classes());
        CHECK(back.reference_distance == doctest::Approx(model.reference_distance).epsilon(1e-6));
        const auto clip = mctest::timeline({ActionKind::bounce}, 30, 4);
        const auto fa = extract_features(clip, model.config);
        const auto ta = model.trajectory(fa.features);
        const auto tb = back.trajectory(fa.features);
        CHECK((ta.points - tb.points).cwiseAbs().maxCoeff() <= 1e-3 * std::max(1.0, ta.points.cwiseAbs().maxCoeff()));
        CHECK(model.classify(model.signature(ta), ta, {}).label == back.classify(back.signature(tb), tb, {}).label);
        std::filesystem::remove(dir.path / "model.json");
        CHECK_THROWS_AS(load_action_model(dir.path), IoError);
    }
}
