#include "motioncloud/model_io.hpp"

#include "motioncloud/error.hpp"
#include "motioncloud/file_util.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace motioncloud {

namespace {

using json = nlohmann::json;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_block(std::vector<std::uint8_t>& out, const Eigen::MatrixXd& m) {
    out.insert(out.end(), {'M', 'C', 'E', 'M'});
    put_u16(out, kSidecarVersion);
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
        }
    }
}

class BlockReader {
public:
    explicit BlockReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    Eigen::MatrixXd next(Eigen::Index rows, Eigen::Index cols) {
        need(14);
        if (std::memcmp(bytes_.data() + pos_, "MCEM", 4) != 0) {
            throw IoError("model sidecar: bad block magic");
        }
        pos_ += 4;
        const std::uint16_t version = u16();
        if (version != kSidecarVersion) {
            throw IoError("model sidecar: unsupported version " + std::to_string(version));
        }
        const std::uint32_t c = u32();
        const std::uint32_t r = u32();
        if (r != rows || c != cols) {
            throw IoError("model sidecar: block shape does not match manifest");
        }
        Eigen::MatrixXd m(rows, cols);
        need(static_cast<std::size_t>(rows) * cols * 4);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                m(i, j) = std::bit_cast<float>(u32());
            }
        }
        return m;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw IoError("model sidecar: truncated");
    }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_eigen_model(const EigenModel& model, const std::filesystem::path& manifest,
                      const std::filesystem::path& sidecar) {
    json doc;
    doc["format"] = "mcem";
    doc["version"] = kSidecarVersion;
    doc["kind"] = model.kind == EigenKind::linear ? "linear" : "polynomial";
    doc["K"] = model.dims();
    doc["D"] = model.input_dim();
    doc["eigenvalues"] = std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.dims());
    doc["sidecar"] = sidecar.filename().string();

    std::vector<std::uint8_t> bytes;
    put_block(bytes, model.mean.transpose());
    if (model.kind == EigenKind::linear) {
        doc["blocks"] = {"mean", "basis"};
        put_block(bytes, model.basis);
    } else {
        doc["d"] = model.degree;
        doc["c"] = model.offset;
        doc["input_scale"] = model.input_scale;
        doc["N"] = model.training.rows();
        doc["blocks"] = {"mean", "coefficients", "training"};
        put_block(bytes, model.coefficients);
        put_block(bytes, model.training);
    }
    atomic_write(sidecar, bytes);
    atomic_write(manifest, doc.dump(2));
}

EigenModel load_eigen_model(const std::filesystem::path& manifest, const std::filesystem::path& sidecar) {
    json doc;
    try {
        doc = json::parse(read_text(manifest));
    } catch (const json::exception& e) {
        throw IoError("model manifest: " + std::string(e.what()));
    }
    try {
        if (doc.at("format") != "mcem") throw IoError("model manifest: unexpected format");
        if (doc.at("version").get<int>() != kSidecarVersion) {
            throw IoError("model manifest: unsupported version");
        }
        EigenModel model;
        const std::string kind = doc.at("kind");
        const auto k = doc.at("K").get<Eigen::Index>();
        const auto d = doc.at("D").get<Eigen::Index>();
        const auto values = doc.at("eigenvalues").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(values.size()) != k) {
            throw IoError("model manifest: eigenvalue count does not match K");
        }
        model.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), k);

        const auto bytes = read_binary(sidecar);
        BlockReader reader(bytes);
        model.mean = reader.next(1, d).transpose();
        if (kind == "linear") {
            model.kind = EigenKind::linear;
            model.basis = reader.next(k, d);
        } else if (kind == "polynomial") {
            model.kind = EigenKind::polynomial;
            model.degree = doc.at("d").get<int>();
            model.offset = doc.at("c").get<double>();
            model.input_scale = doc.at("input_scale").get<double>();
            const auto n = doc.at("N").get<Eigen::Index>();
            model.coefficients = reader.next(k, n);
            model.training = reader.next(n, d);
            // centering statistics are re-derived from the stored float32 vectors
            Eigen::MatrixXd gram = model.training * model.training.transpose();
            gram = (gram.array() + model.offset).pow(model.degree).matrix();
            model.gram_column_means = gram.colwise().mean().transpose();
            model.gram_mean = model.gram_column_means.mean();
        } else {
            throw IoError("model manifest: unknown kind '" + kind + "'");
        }
        if (!reader.done()) {
            throw IoError("model sidecar: trailing data");
        }
        return model;
    } catch (const json::exception& e) {
        throw IoError("model manifest: " + std::string(e.what()));
    }
}

}  // namespace motioncloud
