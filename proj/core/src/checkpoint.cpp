#include "srd/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "srd/binary_io.hpp"

namespace srd {
namespace {

constexpr const char* kMagic = "srdlab-checkpoint";

Shape parse_shape(const std::string& text) {
    if (text == "scalar") return {};
    Shape shape;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, 'x')) {
        std::size_t used = 0;
        const unsigned long long dim = std::stoull(part, &used);
        if (used != part.size() || dim == 0) throw CheckpointError("bad shape '" + text + "'");
        shape.push_back(static_cast<std::size_t>(dim));
    }
    if (shape.empty()) throw CheckpointError("bad shape '" + text + "'");
    return shape;
}

std::string format_shape(const Shape& shape) {
    if (shape.empty()) return "scalar";
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(shape[i]);
    }
    return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& state) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
    out << kMagic << " 1\n" << "tensors " << state.size() << '\n';
    for (const auto& [name, tensor] : state) {
        if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
            throw CheckpointError("invalid tensor name '" + name + "'");
        }
        out << name << ' ' << format_shape(tensor.shape()) << '\n';
    }
    out << "data\n";
    for (const auto& entry : state) write_le_doubles(out, entry.tensor.values());
    if (!out) throw CheckpointError("write failed for " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != std::string(kMagic) + " 1") throw CheckpointError(path.string() + ": not a checkpoint file");
    std::getline(in, line);
    std::size_t count = 0;
    if (std::sscanf(line.c_str(), "tensors %zu", &count) != 1) throw CheckpointError("missing tensor count");

    std::vector<std::pair<std::string, Shape>> entries;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw CheckpointError("truncated header");
        const auto space = line.find(' ');
        if (space == std::string::npos) throw CheckpointError("bad header line '" + line + "'");
        entries.emplace_back(line.substr(0, space), parse_shape(line.substr(space + 1)));
    }
    std::getline(in, line);
    if (line != "data") throw CheckpointError("missing data marker");

    std::vector<NamedTensor> out;
    for (auto& [name, shape] : entries) {
        std::vector<double> values(shape_numel(shape));
        if (!read_le_doubles(in, values)) throw CheckpointError("truncated data for " + name);
        out.push_back({name, Tensor(shape, std::move(values))});
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes in " + path.string());
    return out;
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& state) {
    auto stored = read_checkpoint(path);
    if (stored.size() != state.size()) {
        throw CheckpointError(path.string() + ": holds " + std::to_string(stored.size()) + " tensors, expected " +
                              std::to_string(state.size()));
    }
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (stored[i].name != state[i].name || stored[i].tensor.shape() != state[i].tensor.shape()) {
            throw CheckpointError(path.string() + ": entry " + stored[i].name + " " +
                                  shape_to_string(stored[i].tensor.shape()) + " does not match " + state[i].name +
                                  " " + shape_to_string(state[i].tensor.shape()));
        }
    }
    for (std::size_t i = 0; i < state.size(); ++i) {
        Tensor target = state[i].tensor;
        std::ranges::copy(stored[i].tensor.values(), target.mutable_values().begin());
    }
}

}  // namespace srd
