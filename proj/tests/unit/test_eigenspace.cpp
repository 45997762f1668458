#include "motioncloud/eigenspace.hpp"
#include "motioncloud/error.hpp"
#include "motioncloud/model_io.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include <unistd.h>

using namespace motioncloud;

namespace {

TrainingSet random_set(std::uint64_t seed, int n, int d, int classes) {
    mctest::SplitMix rng(seed);
    TrainingSet t;
    t.samples = mctest::random_matrix(rng, n, d);
    for (int i = 0; i < n; ++i) {
        t.labels.push_back("c" + std::to_string(i % classes));
        t.clip_ids.push_back("clip" + std::to_string(i));
    }
    return t;
}

TrainingSet rings(int per_ring) {
    TrainingSet t;
    t.samples.resize(2 * per_ring, 2);
    for (int i = 0; i < 2 * per_ring; ++i) {
        const double r = i < per_ring ? 1.0 : 2.0;
        const double u = 6.283185307179586 * (i % per_ring) / per_ring;
        t.samples.row(i) << r * std::cos(u), r * std::sin(u);
        t.labels.push_back(i < per_ring ? "inner" : "outer");
        t.clip_ids.push_back(std::to_string(i));
    }
    return t;
}

}  // namespace

TEST_SUITE("eigenspace") {
    TEST_CASE("surrogate PCA matches the direct covariance oracle") {
        const TrainingSet t = random_set(1, 40, 24, 3);
        const EigenModel m = train_pca(t, 8);
        const Eigen::MatrixXd ours = m.project_rows(t.samples);
        const Eigen::MatrixXd oracle = mctest::covariance_projections(t.samples, t.samples, 8);
        CHECK(mctest::max_relative_error_up_to_sign(ours, oracle) <= 1e-6);
    }

    TEST_CASE("basis is orthonormal and eigenvalues are ordered") {
        const EigenModel m = train_pca(random_set(2, 30, 50, 2), 10);
        const Eigen::MatrixXd g = m.basis * m.basis.transpose();
        CHECK((g - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-6);
        for (Eigen::Index i = 1; i < m.eigenvalues.size(); ++i) {
            CHECK(std::abs(m.eigenvalues(i)) <= std::abs(m.eigenvalues(i - 1)));
        }
    }

    TEST_CASE("default dimensionality is ten") {
        CHECK(kDefaultDimensions == 10);
        CHECK(train_pca(random_set(3, 20, 30, 2)).dims() == 10);
    }

    TEST_CASE("rank-one data: first axis along the line, second eigenvalue zero") {
        TrainingSet t;
        t.samples.resize(6, 2);
        for (int i = 0; i < 6; ++i) {
            t.samples.row(i) << 3.0 * (i - 2.5), 4.0 * (i - 2.5);
            t.labels.push_back(i < 3 ? "a" : "b");
            t.clip_ids.push_back(std::to_string(i));
        }
        const EigenModel m = train_pca(t, 2);
        CHECK(std::abs(m.basis.row(0).dot(Eigen::RowVector2d(0.6, 0.8))) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(m.eigenvalues(1)) <= 1e-9);
        // sign rule: largest-magnitude component positive
        CHECK(m.basis(0, 1) > 0);
    }

    TEST_CASE("projecting the mean gives the origin") {
        const EigenModel m = train_pca(random_set(4, 25, 16, 2), 5);
        CHECK(m.project(m.mean).norm() <= 1e-10);
    }

    TEST_CASE("training errors") {
        CHECK_THROWS_AS(train_pca(random_set(5, 5, 10, 2), 6), InvalidArgument);
        TrainingSet flat = random_set(6, 8, 4, 2);
        flat.samples.setConstant(3.0);
        CHECK_THROWS_WITH_AS(train_pca(flat, 2), doctest::Contains("no variance"), NumericalError);
        CHECK_THROWS_WITH_AS(train_kpca(flat, 2, {}), doctest::Contains("no variance"), NumericalError);
        const EigenModel m = train_pca(random_set(7, 10, 4, 2), 2);
        CHECK_THROWS_AS(m.project(Eigen::VectorXd::Zero(5)), InvalidArgument);
    }

    TEST_CASE("linear kernel KPCA equals PCA up to axis sign") {
        const TrainingSet t = random_set(8, 50, 64, 3);
        const EigenModel pca = train_pca(t, 10);
        const EigenModel kpca = train_kpca(t, 10, {.degree = 1, .offset = 0.0, .input_scale = 1.0});
        mctest::SplitMix rng(9);
        const Eigen::MatrixXd probe = mctest::random_matrix(rng, 7, 64);
        CHECK(mctest::max_relative_error_up_to_sign(kpca.project_rows(t.samples), pca.project_rows(t.samples)) <= 1e-6);
        CHECK(mctest::max_relative_error_up_to_sign(kpca.project_rows(probe), pca.project_rows(probe)) <= 1e-6);
        CHECK((kpca.eigenvalues - pca.eigenvalues).cwiseAbs().maxCoeff() <= 1e-6 * pca.eigenvalues(0));
    }

    TEST_CASE("kernel coefficients satisfy the normalization condition") {
        const TrainingSet t = random_set(10, 30, 20, 3);
        const EigenModel m = train_kpca(t, 6, {.degree = 3, .offset = 1.0, .input_scale = 0.2});
        const double n = static_cast<double>(t.size());
        for (Eigen::Index i = 0; i < m.dims(); ++i) {
            CHECK(m.eigenvalues(i) * n * m.coefficients.row(i).squaredNorm() == doctest::Approx(1.0).epsilon(1e-6));
        }
    }

    TEST_CASE("double-centred Gram rows sum to zero") {
        const TrainingSet t = random_set(11, 25, 12, 2);
        const EigenModel m = train_kpca(t, 4, {.degree = 2, .offset = 1.0, .input_scale = 0.3});
        const Eigen::Index n = m.training.rows();
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) k(a, b) = std::pow(m.training.row(a).dot(m.training.row(b)) + 1.0, 2);
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
        const Eigen::MatrixXd kc = k - ones * k - k * ones + ones * k * ones;
        CHECK(kc.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-6 * static_cast<double>(n));
        CHECK((m.gram_column_means - k.colwise().mean().transpose()).cwiseAbs().maxCoeff() <= 1e-9);
    }

    TEST_CASE("projecting a training sample reproduces its training projection") {
        const TrainingSet t = random_set(12, 20, 10, 2);
        for (const EigenModel& m : {train_pca(t, 4), train_kpca(t, 4, {.degree = 2, .offset = 1.0, .input_scale = 0.1})}) {
            for (Eigen::Index i = 0; i < 20; ++i) {
                CHECK((m.project(t.samples.row(i).transpose()) - m.training_projections.row(i).transpose())
                          .cwiseAbs()
                          .maxCoeff() <= 1e-8);
            }
        }
    }

    TEST_CASE("default input scale keeps high-degree Gram entries finite") {
        TrainingSet t = random_set(13, 20, 1024, 2);
        t.samples = (t.samples.array() * 60.0 + 128.0).cwiseMax(0.0).cwiseMin(255.0).matrix();
        const EigenModel m = train_kpca(t, 5, {.degree = 8, .offset = 1.0, .input_scale = 0.0});
        CHECK(m.input_scale == doctest::Approx(1.0 / (255.0 * 32.0)));
        CHECK(m.project_rows(t.samples).allFinite());
    }

    TEST_CASE("overflowing Gram matrix is reported") {
        TrainingSet t = random_set(14, 10, 8, 2);
        t.samples *= 1e40;
        CHECK_THROWS_AS(train_kpca(t, 3, {.degree = 8, .offset = 1.0, .input_scale = 1.0}), NumericalError);
    }

    TEST_CASE("project_sequence preserves order and cardinality") {
        const TrainingSet t = random_set(15, 39, 12, 3);
        const EigenModel m = train_pca(t, 5);
        const Trajectory traj = project_sequence(m, t.samples);
        CHECK(traj.size() == 39);
        CHECK(traj.frame_index.front() == 0);
        CHECK(traj.frame_index.back() == 38);
        const Trajectory rev = project_sequence(m, t.samples.colwise().reverse());
        for (Eigen::Index i = 0; i < 39; ++i) CHECK((rev.points.row(i) - traj.points.row(38 - i)).norm() <= 1e-12);
    }

    TEST_CASE("black templates cluster at the projection of the zero template") {
        TrainingSet t = random_set(16, 30, 64, 2);
        t.samples = t.samples.cwiseAbs() * 50.0;
        const EigenModel m = train_kpca(t, 5, {});
        const Trajectory traj = project_sequence(m, Eigen::MatrixXd::Zero(9, 64));
        const Eigen::RowVectorXd rest = m.project(Eigen::VectorXd::Zero(64)).transpose();
        for (Eigen::Index i = 0; i < 9; ++i) CHECK((traj.points.row(i) - rest).norm() <= 1e-12);
    }

    TEST_CASE("property: adding a constant vector leaves projections unchanged") {
        mctest::SplitMix rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            const TrainingSet t = random_set(rng.next(), 20, 12, 2);
            TrainingSet shifted = t;
            const Eigen::RowVectorXd offset = mctest::random_matrix(rng, 1, 12, 5.0);
            shifted.samples = t.samples.rowwise() + offset;
            const Eigen::MatrixXd probe = mctest::random_matrix(rng, 4, 12);
            const Eigen::MatrixXd probe_shifted = probe.rowwise() + offset;
            const EigenModel a = train_pca(t, 4), b = train_pca(shifted, 4);
            CHECK((a.project_rows(probe) - b.project_rows(probe_shifted)).cwiseAbs().maxCoeff() <= 1e-6);
            const KernelParams kp{.degree = 2, .offset = 1.0, .input_scale = 0.2};
            const EigenModel c = train_kpca(t, 4, kp), d = train_kpca(shifted, 4, kp);
            CHECK((c.project_rows(probe) - d.project_rows(probe_shifted)).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }

    TEST_CASE("separation ratio: degenerate, symmetric and single-class cases") {
        Eigen::MatrixXd pts(4, 2);
        pts << 0, 0, 0, 0, 1, 1, 1, 1;
        const std::vector<std::string> labels{"a", "a", "b", "b"};
        CHECK(class_separation_ratio(pts, labels) == std::numeric_limits<double>::infinity());

        mctest::SplitMix rng(18);
        const Eigen::MatrixXd same = mctest::random_matrix(rng, 400, 3);
        std::vector<std::string> mixed;
        for (int i = 0; i < 400; ++i) mixed.push_back(i % 2 ? "a" : "b");
        CHECK(class_separation_ratio(same, mixed) == doctest::Approx(1.0).epsilon(0.05));

        const std::vector<std::string> one{"a", "a", "a", "a"};
        CHECK_THROWS_AS(class_separation_ratio(pts, one), InvalidArgument);
    }

    TEST_CASE("degree sweep prefers a nonlinear kernel on concentric rings") {
        const TrainingSet t = rings(24);
        const std::vector<int> degrees{1, 2, 3, 4};
        const DegreeSweep sweep = tune_kernel_degree(t, 3, degrees, 1.0, 1.0);
        REQUIRE(sweep.curve.size() == 4);
        CHECK(sweep.curve[1].second > sweep.curve[0].second);
        CHECK(sweep.best_degree > 1);

        const std::vector<int> single{1};
        CHECK(tune_kernel_degree(t, 3, single, 1.0, 1.0).best_degree == 1);
    }

    TEST_CASE("model persistence round-trips both kinds") {
        const auto dir = std::filesystem::temp_directory_path() / ("mc_model_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        const TrainingSet t = random_set(19, 24, 16, 2);
        mctest::SplitMix rng(20);
        const Eigen::MatrixXd probe = mctest::random_matrix(rng, 5, 16);
        for (const EigenModel& m : {train_pca(t, 5), train_kpca(t, 5, {.degree = 3, .offset = 1.0, .input_scale = 0.1})}) {
            save_eigen_model(m, dir / "m.json", dir / "m.bin");
            const EigenModel back = load_eigen_model(dir / "m.json", dir / "m.bin");
            CHECK(back.kind == m.kind);
            CHECK(back.dims() == m.dims());
            const Eigen::MatrixXd a = m.project_rows(probe), b = back.project_rows(probe);
            // float32 sidecar
            CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, a.cwiseAbs().maxCoeff()));
        }
        // corrupt sidecar
        std::filesystem::resize_file(dir / "m.bin", 10);
        CHECK_THROWS_AS(load_eigen_model(dir / "m.json", dir / "m.bin"), IoError);
        std::filesystem::remove_all(dir);
    }
}
