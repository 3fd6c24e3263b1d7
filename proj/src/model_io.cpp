#include "slotfill/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace slotfill {

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next(const std::string& what) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw ModelFormatError("model file truncated: expected " + what + " at line " +
                                   std::to_string(line_ + 1));
        }
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::size_t line() const { return line_; }

    [[noreturn]] void fail(const std::string& message) const {
        throw ModelFormatError("model file line " + std::to_string(line_) + ": " + message);
    }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string field; in >> field;) out.push_back(field);
    return out;
}

std::size_t parse_size(LineReader& reader, const std::string& text) {
    std::size_t value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) reader.fail("expected an unsigned integer, got '" + text + "'");
    return value;
}

double parse_double(LineReader& reader, const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) reader.fail("expected a number, got '" + text + "'");
    return value;
}

// Reads `key value...` and returns the values.
std::vector<std::string> read_field(LineReader& reader, const std::string& key) {
    std::vector<std::string> fields = split_ws(reader.next(key));
    if (fields.size() < 2 || fields[0] != key) reader.fail("expected '" + key + " <value>'");
    fields.erase(fields.begin());
    return fields;
}

std::size_t read_size_field(LineReader& reader, const std::string& key) {
    const auto values = read_field(reader, key);
    if (values.size() != 1) reader.fail("expected a single value for '" + key + "'");
    return parse_size(reader, values[0]);
}

Vocabulary read_vocabulary(LineReader& reader, const std::string& key, const Vocabulary& reserved) {
    const std::size_t count = read_size_field(reader, key);
    std::vector<std::string> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string entry = reader.next(key + " entry");
        if (entry.empty() || entry.find_first_of(" \t") != std::string::npos) {
            reader.fail("invalid " + key + " entry '" + entry + "'");
        }
        entries.push_back(std::move(entry));
    }
    try {
        return Vocabulary::from_entries(std::move(entries), reserved);
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                   std::chars_format::general, 17);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buffer, ptr);
}

void write_model(std::ostream& out, const SavedModel& model) {
    const ModelConfig& config = model.params.config;
    model.params.validate();
    if (model.words.size() != config.vocab_size || model.labels.size() != config.num_labels + 1) {
        throw std::invalid_argument("write_model: vocabularies do not match the model");
    }
    out << "slotfill-model " << kModelFormatVersion << '\n';
    out << "arch " << architecture_name(config.arch) << '\n';
    out << "depth " << config.depth() << '\n';
    out << "d_e " << config.embedding_dim << '\n';
    out << "d_h";
    for (std::size_t d : config.hidden_dims) out << ' ' << d;
    out << '\n';
    out << "k " << config.context << '\n';
    out << "label_dim " << config.label_embedding_dim << '\n';
    out << "beam " << model.beam << '\n';
    out << "words " << model.words.size() << '\n';
    for (const std::string& w : model.words.entries()) out << w << '\n';
    out << "labels " << model.labels.size() << '\n';
    for (const std::string& l : model.labels.entries()) out << l << '\n';

    const auto tensors = model.params.tensors();
    out << "tensors " << tensors.size() << '\n';
    for (const auto& [name, tensor] : tensors) {
        out << name << '\n' << tensor->rows() << ' ' << tensor->cols() << '\n';
        for (std::size_t r = 0; r < tensor->rows(); ++r) {
            for (std::size_t c = 0; c < tensor->cols(); ++c) {
                if (c > 0) out << ' ';
                out << format_double((*tensor)(r, c));
            }
            out << '\n';
        }
    }
    out << "end\n";
}

SavedModel read_model(std::istream& in) {
    LineReader reader(in);
    const auto magic = split_ws(reader.next("header"));
    if (magic.size() != 2 || magic[0] != "slotfill-model") reader.fail("not a slotfill model file");
    const std::size_t version = parse_size(reader, magic[1]);
    if (version != static_cast<std::size_t>(kModelFormatVersion)) {
        reader.fail("unsupported format version " + magic[1] + " (expected " +
                    std::to_string(kModelFormatVersion) + ")");
    }

    ModelConfig config;
    {
        const auto arch = read_field(reader, "arch");
        try {
            config.arch = parse_architecture(arch.at(0));
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    const std::size_t depth = read_size_field(reader, "depth");
    config.embedding_dim = read_size_field(reader, "d_e");
    for (const std::string& d : read_field(reader, "d_h")) {
        config.hidden_dims.push_back(parse_size(reader, d));
    }
    if (config.hidden_dims.size() != depth) reader.fail("d_h lists " +
        std::to_string(config.hidden_dims.size()) + " layers but depth is " + std::to_string(depth));
    config.context = read_size_field(reader, "k");
    config.label_embedding_dim = read_size_field(reader, "label_dim");

    SavedModel model;
    model.beam = read_size_field(reader, "beam");
    if (model.beam < 1) reader.fail("beam must be >= 1");
    model.words = read_vocabulary(reader, "words", Vocabulary::words());
    model.labels = read_vocabulary(reader, "labels", Vocabulary::labels());
    config.vocab_size = model.words.size();
    config.num_labels = model.labels.size() - 1;

    try {
        model.params = ModelParams::zeros(config);
    } catch (const std::invalid_argument& e) {
        reader.fail(std::string("inconsistent header: ") + e.what());
    }
    auto tensors = model.params.tensors();
    if (read_size_field(reader, "tensors") != tensors.size()) {
        reader.fail("tensor count does not match architecture");
    }
    for (auto& [name, tensor] : tensors) {
        const std::string found = reader.next("tensor " + name);
        if (found != name) reader.fail("expected tensor '" + name + "', found '" + found + "'");
        const auto dims = split_ws(reader.next("dimensions of " + name));
        if (dims.size() != 2) reader.fail("expected 'rows cols' for " + name);
        const std::size_t rows = parse_size(reader, dims[0]);
        const std::size_t cols = parse_size(reader, dims[1]);
        if (rows != tensor->rows() || cols != tensor->cols()) {
            reader.fail(name + " is " + dims[0] + "x" + dims[1] + " but the header implies " +
                        tensor->shape_string());
        }
        for (std::size_t r = 0; r < rows; ++r) {
            const auto values = split_ws(reader.next("row " + std::to_string(r) + " of " + name));
            if (values.size() != cols) {
                reader.fail(name + " row " + std::to_string(r) + " has " +
                            std::to_string(values.size()) + " values, expected " +
                            std::to_string(cols));
            }
            for (std::size_t c = 0; c < cols; ++c) (*tensor)(r, c) = parse_double(reader, values[c]);
        }
        if (!tensor->all_finite()) reader.fail(name + " contains non-finite values");
    }
    if (reader.next("end marker") != "end") reader.fail("expected 'end' after the last tensor");
    return model;
}

void save_model(const SavedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_model(out, model);
    out.flush();
    if (!out) throw std::runtime_error("error while writing " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_model(in);
}

}  // namespace slotfill
