#include "bvlab/datasets.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bvlab/error.hpp"
#include "bvlab/linalg.hpp"
#include "bvlab/textio.hpp"

namespace bvlab::data {

const char* kind_name(GeneratorKind k) noexcept { return k == GeneratorKind::linear ? "linear" : "nonlinear"; }

GeneratorKind parse_kind(const std::string& s) {
    if (s == "linear") return GeneratorKind::linear;
    if (s == "nonlinear") return GeneratorKind::nonlinear;
    throw ArgumentError("unknown dataset kind '" + s + "' (expected linear or nonlinear)");
}

FactorDataset FactorDataset::subset(std::span<const std::size_t> rows) const {
    FactorDataset out;
    out.y = y.take_rows(rows);
    out.x = x.take_rows(rows);
    out.kind = kind;
    out.params = params;
    out.seed = seed;
    return out;
}

Matrix regenerate(const GeneratorParams& params, const Matrix& y) {
    if (const auto* w = std::get_if<Matrix>(&params)) return matmul(y, *w);
    return nn::mlp_predict(std::get<nn::Mlp>(params), y);
}

namespace {

void require_rows(std::size_t n) {
    if (n < 1) throw ArgumentError("dataset size must be >= 1");
}

// Stream ids under the dataset seed.
constexpr std::uint64_t kFactorStream = 1;
constexpr std::uint64_t kGeneratorStream = 2;

} // namespace

FactorDataset gen_linear(const RngState& rng, std::size_t n) {
    require_rows(n);
    RngState factor_rng = rng.split(kFactorStream);
    RngState gen_rng = rng.split(kGeneratorStream);
    FactorDataset ds;
    ds.kind = GeneratorKind::linear;
    ds.seed = rng.seed();
    ds.y = sample(factor_rng, Distribution::uniform01, n, kFactorDim);
    Matrix w = sample(gen_rng, Distribution::standard_normal, kFactorDim, kObservationDim);
    ds.x = matmul(ds.y, w);
    ds.params = std::move(w);
    return ds;
}

FactorDataset gen_nonlinear(const RngState& rng, std::size_t n) {
    require_rows(n);
    RngState factor_rng = rng.split(kFactorStream);
    RngState gen_rng = rng.split(kGeneratorStream);
    FactorDataset ds;
    ds.kind = GeneratorKind::nonlinear;
    ds.seed = rng.seed();
    ds.y = sample(factor_rng, Distribution::uniform01, n, kFactorDim);

    nn::Mlp net;
    std::size_t fan_in = kFactorDim;
    for (int layer = 0; layer < 3; ++layer) {
        nn::DenseLayer l;
        const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
        l.weights = sample(gen_rng, Distribution::standard_normal, fan_in, kObservationDim);
        for (double& w : l.weights.data()) w *= sd;
        const Matrix b = sample(gen_rng, Distribution::standard_normal, 1, kObservationDim);
        l.bias.assign(b.data().begin(), b.data().end());
        for (double& v : l.bias) v *= sd;
        l.activation = nn::Activation::tanh;
        net.layers.push_back(std::move(l));
        fan_in = kObservationDim;
    }
    ds.x = nn::mlp_predict(net, ds.y);
    ds.params = std::move(net);
    return ds;
}

FactorDataset generate(GeneratorKind kind, std::uint64_t seed, std::size_t n) {
    const RngState rng(seed);
    return kind == GeneratorKind::linear ? gen_linear(rng, n) : gen_nonlinear(rng, n);
}

SplitDataset split(const FactorDataset& ds, double ratio, const RngState& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split ratio must lie in (0, 1)");
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n)
        throw ArgumentError("split of " + std::to_string(n) + " rows at ratio " + textio::sig6(ratio) +
                            " leaves one side empty");
    RngState r = rng;
    const auto perm = permutation(r, n);
    const std::span<const std::size_t> all(perm);
    return {ds.subset(all.subspan(0, n_train)), ds.subset(all.subspan(n_train)), ratio};
}

namespace {

std::string params_to_text(const GeneratorParams& params) {
    std::string out;
    if (const auto* w = std::get_if<Matrix>(&params)) {
        out = "matrix;" + std::to_string(w->rows()) + "x" + std::to_string(w->cols()) + ";" +
              textio::join_hex(w->data(), ' ');
        return out;
    }
    const auto& net = std::get<nn::Mlp>(params);
    out = "mlp;" + std::to_string(net.layers.size());
    for (const auto& l : net.layers) {
        out += ";" + std::to_string(l.in()) + "x" + std::to_string(l.out()) + ":" + nn::activation_name(l.activation) +
               ":" + textio::join_hex(l.weights.data(), ' ') + ":" + textio::join_hex(l.bias, ' ');
    }
    return out;
}

std::pair<std::size_t, std::size_t> parse_shape(const std::string& s) {
    const auto parts = textio::split(s, 'x');
    if (parts.size() != 2) throw ArgumentError("malformed shape '" + s + "'");
    return {textio::parse_u64(parts[0]), textio::parse_u64(parts[1])};
}

GeneratorParams params_from_text(const std::string& text) {
    const auto fields = textio::split(text, ';');
    if (fields.empty()) throw ArgumentError("empty generator params");
    if (fields[0] == "matrix") {
        if (fields.size() != 3) throw ArgumentError("matrix params need shape and values");
        const auto [r, c] = parse_shape(fields[1]);
        return Matrix(r, c, textio::parse_doubles(fields[2], ' '));
    }
    if (fields[0] == "mlp") {
        if (fields.size() < 2) throw ArgumentError("mlp params need a layer count");
        const auto count = textio::parse_u64(fields[1]);
        if (fields.size() != 2 + count) throw ArgumentError("mlp params layer count mismatch");
        nn::Mlp net;
        for (std::size_t i = 0; i < count; ++i) {
            const auto parts = textio::split(fields[2 + i], ':');
            if (parts.size() != 4) throw ArgumentError("malformed mlp layer");
            const auto [in, out] = parse_shape(parts[0]);
            nn::DenseLayer l;
            l.activation = nn::parse_activation(parts[1]);
            l.weights = Matrix(in, out, textio::parse_doubles(parts[2], ' '));
            l.bias = textio::parse_doubles(parts[3], ' ');
            net.layers.push_back(std::move(l));
        }
        net.validate();
        return net;
    }
    throw ArgumentError("unknown generator params type '" + fields[0] + "'");
}

std::string header_line() {
    std::string h;
    for (std::size_t i = 0; i < kFactorDim; ++i) h += (i ? ",y" : "y") + std::to_string(i);
    for (std::size_t i = 0; i < kObservationDim; ++i) h += ",x" + std::to_string(i);
    return h;
}

} // namespace

std::string to_csv(const FactorDataset& ds) {
    std::string out;
    out += "# kind=" + std::string(kind_name(ds.kind)) + " seed=" + std::to_string(ds.seed) +
           " n=" + std::to_string(ds.size()) + " params=" + params_to_text(ds.params) + "\n";
    out += header_line() + "\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < ds.y.cols(); ++c) {
            if (c) out += ',';
            out += textio::exact(ds.y(r, c));
        }
        for (std::size_t c = 0; c < ds.x.cols(); ++c) {
            out += ',';
            out += textio::exact(ds.x(r, c));
        }
        out += '\n';
    }
    return out;
}

void save(const FactorDataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open dataset for writing: " + path.string());
    os << to_csv(ds);
    if (!os) throw Error("failed writing dataset: " + path.string());
}

FactorDataset from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(is, line)) throw ParseError(1, "empty dataset file");
    ++line_no;
    if (line.rfind("# ", 0) != 0) throw ParseError(line_no, "expected metadata line starting with '# '");
    FactorDataset ds;
    std::size_t declared_n = 0;
    bool have_kind = false, have_params = false;
    try {
        std::istringstream meta(line.substr(2));
        std::string kv;
        // params value contains spaces; it is always the last field
        while (meta >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ArgumentError("malformed metadata field '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            std::string value = kv.substr(eq + 1);
            if (key == "params") {
                std::string rest;
                std::getline(meta, rest);
                ds.params = params_from_text(value + rest);
                have_params = true;
                break;
            }
            if (key == "kind") {
                ds.kind = parse_kind(value);
                have_kind = true;
            } else if (key == "seed")
                ds.seed = textio::parse_u64(value);
            else if (key == "n")
                declared_n = textio::parse_u64(value);
            else
                throw ArgumentError("unknown metadata key '" + key + "'");
        }
    } catch (const ArgumentError& e) {
        throw ParseError(line_no, e.what());
    }
    if (!have_kind || !have_params) throw ParseError(line_no, "metadata must carry kind and params");

    if (!std::getline(is, line)) throw ParseError(line_no + 1, "missing header row");
    ++line_no;
    if (textio::trim(line) != header_line()) throw ParseError(line_no, "header must be " + header_line());

    constexpr std::size_t kColumns = kFactorDim + kObservationDim;
    std::vector<double> yv, xv;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (textio::trim(line).empty()) continue;
        const auto cells = textio::split(textio::trim(line), ',');
        if (cells.size() != kColumns)
            throw ParseError(line_no, "expected " + std::to_string(kColumns) + " data columns (4 Y + 14 X), got " +
                                          std::to_string(cells.size()));
        try {
            for (std::size_t c = 0; c < kFactorDim; ++c) yv.push_back(textio::parse_double(cells[c]));
            for (std::size_t c = kFactorDim; c < kColumns; ++c) xv.push_back(textio::parse_double(cells[c]));
        } catch (const ArgumentError& e) {
            throw ParseError(line_no, e.what());
        }
        ++rows;
    }
    if (declared_n != 0 && declared_n != rows)
        throw ParseError(line_no, "metadata declares n=" + std::to_string(declared_n) + " but file has " +
                                      std::to_string(rows) + " rows");
    ds.y = Matrix(rows, kFactorDim, std::move(yv));
    ds.x = Matrix(rows, kObservationDim, std::move(xv));
    return ds;
}

FactorDataset load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open dataset: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_csv(ss.str());
}

} // namespace bvlab::data
