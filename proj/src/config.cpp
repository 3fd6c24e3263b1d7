#include "slotfill/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <vector>

namespace slotfill {

namespace {

std::string_view trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    text = trim(text);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw std::invalid_argument("invalid value '" + std::string(text) + "' for " +
                                    std::string(key));
    }
    return value;
}

std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view text) {
    std::vector<std::size_t> out;
    text = trim(text);
    if (text.empty()) throw std::invalid_argument(std::string(key) + " has no values");
    while (true) {
        const auto comma = text.find(',');
        out.push_back(parse_number<std::size_t>(key, text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

template <typename F>
void for_each_setting(std::istream& in, F&& apply) {
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string_view content = trim(line);
        if (content.empty() || content.front() == '#') continue;
        const auto eq = content.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("line " + std::to_string(line_number) +
                                        ": expected key=value");
        }
        try {
            apply(trim(content.substr(0, eq)), trim(content.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(line_number) + ": " + e.what());
        }
    }
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
    Hyperparams& h = config.hyper;
    if (key == "arch") {
        h.arch = parse_architecture(trim(value));
    } else if (key == "depth") {
        const auto depth = parse_number<std::size_t>(key, value);
        if (depth < 1 || depth > 2) throw std::invalid_argument("depth must be 1 or 2");
        h.hidden_dims.resize(depth, h.hidden_dims.back());
    } else if (key == "d_e") {
        h.embedding_dim = parse_number<std::size_t>(key, value);
    } else if (key == "d_h") {
        h.hidden_dims = parse_size_list(key, value);
    } else if (key == "k") {
        h.context = parse_number<std::size_t>(key, value);
    } else if (key == "label_dim") {
        h.label_embedding_dim = parse_number<std::size_t>(key, value);
    } else if (key == "lr") {
        h.learning_rate = parse_number<double>(key, value);
    } else if (key == "dropout") {
        h.dropout = parse_number<double>(key, value);
    } else if (key == "epochs") {
        h.epochs = parse_number<std::size_t>(key, value);
    } else if (key == "beam") {
        h.beam = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        h.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "split_seed") {
        h.split_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "heldout_ratio") {
        h.heldout_ratio = parse_number<double>(key, value);
    } else if (key == "clip") {
        h.clip = parse_number<double>(key, value);
    } else if (key == "min_count") {
        h.min_count = parse_number<std::size_t>(key, value);
    } else if (key == "data") {
        config.data = std::string(trim(value));
    } else if (key == "eval_data") {
        config.eval_data = std::string(trim(value));
    } else if (key == "out") {
        config.out = std::string(trim(value));
    } else {
        throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    }
}

RunConfig parse_run_config(std::istream& in) {
    RunConfig config;
    for_each_setting(in, [&](std::string_view key, std::string_view value) {
        apply_setting(config, key, value);
    });
    config.hyper.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse_run_config(in);
}

SearchSpace parse_search_space(std::istream& in) {
    SearchSpace space;
    for_each_setting(in, [&](std::string_view key, std::string_view value) {
        if (key == "d_e") {
            space.embedding_dims = parse_size_list(key, value);
        } else if (key == "d_h") {
            space.hidden_dims = parse_size_list(key, value);
        } else if (key == "k") {
            space.contexts = parse_size_list(key, value);
        } else if (key == "lr") {
            const auto colon = value.find(':');
            if (colon == std::string_view::npos) {
                throw std::invalid_argument("lr must be written lo:hi");
            }
            space.lr_min = parse_number<double>(key, value.substr(0, colon));
            space.lr_max = parse_number<double>(key, value.substr(colon + 1));
        } else {
            throw std::invalid_argument("unknown search-space key '" + std::string(key) + "'");
        }
    });
    space.validate();
    return space;
}

SearchSpace load_search_space(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open search space " + path.string());
    return parse_search_space(in);
}

}  // namespace slotfill
