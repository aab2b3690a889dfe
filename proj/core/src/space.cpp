// SPDX-License-Identifier: Apache-2.0
#include "kdnas/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kdnas/rng.hpp"

namespace kdnas::space {

using nlohmann::json;

bool value_equals(const CatalogValue& a, const CatalogValue& b) {
    return a == b;
}

std::string value_to_string(const CatalogValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    std::ostringstream os;
    const double d = std::get<double>(v);
    if (d == static_cast<long long>(d)) {
        os << static_cast<long long>(d);
    } else {
        os << d;
    }
    return os.str();
}

IndexOutOfCatalog::IndexOutOfCatalog(int dimension_, int value_, int cardinality)
    : ConfigError("decision index " + std::to_string(value_) + " out of catalog for dimension " +
                  std::to_string(dimension_) + " (cardinality " + std::to_string(cardinality) + ")"),
      dimension(dimension_),
      value(value_) {}

LengthMismatch::LengthMismatch(std::size_t got, std::size_t expected)
    : ConfigError("sequence length " + std::to_string(got) + " does not match expected " +
                  std::to_string(expected)) {}

SearchSpaceDef::SearchSpaceDef(std::string name, std::vector<BlockDef> blocks)
    : name_(std::move(name)), blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw ConfigError("search space needs at least one block");
    for (const auto& block : blocks_) {
        if (block.dims.empty()) throw ConfigError("block without decision dimensions");
        for (const auto& dim : block.dims) {
            if (dim.values.empty()) throw ConfigError("empty catalog for dimension '" + dim.name + "'");
        }
    }
    int offset = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (const auto& dim : blocks_[b].dims) {
            dims_.push_back(&dim);
            dim_block_.push_back(static_cast<int>(b));
            segment_offsets_.push_back(offset);
            offset += static_cast<int>(dim.values.size());
        }
    }
    onehot_length_ = offset;

    // Content hash over the canonical JSON text.
    const std::string text = to_json_text();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    identity_ = splitmix64(h);
}

int SearchSpaceDef::cardinality(int d) const {
    if (d < 0 || d >= dim_count()) throw ConfigError("dimension index out of range");
    return static_cast<int>(dims_[static_cast<std::size_t>(d)]->values.size());
}

std::size_t SearchSpaceDef::size_capped(std::size_t cap) const {
    std::size_t n = 1;
    for (int d = 0; d < dim_count(); ++d) {
        const std::size_t k = static_cast<std::size_t>(cardinality(d));
        if (n > cap / k) return cap + 1;
        n *= k;
    }
    return n;
}

namespace {

CatalogValue value_from_json(const json& j) {
    if (j.is_string()) return CatalogValue{j.get<std::string>()};
    if (j.is_number()) return CatalogValue{j.get<double>()};
    throw ConfigError("catalog values must be numbers or strings");
}

json value_to_json(const CatalogValue& v) {
    if (std::holds_alternative<std::string>(v)) return json(std::get<std::string>(v));
    return json(std::get<double>(v));
}

}  // namespace

SearchSpaceDef SearchSpaceDef::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("search space is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version") || !j.contains("blocks")) {
        throw ConfigError("search space JSON requires schema_version and blocks");
    }
    if (j["schema_version"].get<int>() != 1) {
        throw ConfigError("unsupported search space schema_version");
    }
    std::vector<BlockDef> blocks;
    for (const auto& jb : j["blocks"]) {
        BlockDef block;
        block.base_width = jb.value("base_width", 0);
        for (const auto& jd : jb.at("dims")) {
            DimensionDef dim;
            dim.name = jd.at("name").get<std::string>();
            for (const auto& jv : jd.at("values")) dim.values.push_back(value_from_json(jv));
            block.dims.push_back(std::move(dim));
        }
        blocks.push_back(std::move(block));
    }
    return SearchSpaceDef(j.value("name", std::string("unnamed")), std::move(blocks));
}

SearchSpaceDef SearchSpaceDef::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open search space file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string SearchSpaceDef::to_json_text() const {
    json j;
    j["schema_version"] = schema_version_;
    j["name"] = name_;
    j["blocks"] = json::array();
    for (const auto& block : blocks_) {
        json jb;
        jb["base_width"] = block.base_width;
        jb["dims"] = json::array();
        for (const auto& dim : block.dims) {
            json jd;
            jd["name"] = dim.name;
            jd["values"] = json::array();
            for (const auto& v : dim.values) jd["values"].push_back(value_to_json(v));
            jb["dims"].push_back(std::move(jd));
        }
        j["blocks"].push_back(std::move(jb));
    }
    return j.dump();
}

SearchSpaceDef SearchSpaceDef::default_space() {
    // 7 blocks x 5 decisions = 35 dimensions; cardinalities sum to 77.
    // Skip pairs rotate across blocks so every skip kind appears.
    const int base_widths[7] = {16, 16, 24, 24, 32, 32, 48};
    const std::vector<std::vector<std::string>> skip_pairs = {
        {"none", "add"}, {"none", "proj"}, {"add", "gate"}, {"none", "add"},
        {"none", "gate"}, {"add", "proj"}, {"none", "add"}};
    std::vector<BlockDef> blocks;
    for (int b = 0; b < 7; ++b) {
        BlockDef block;
        block.base_width = base_widths[b];
        DimensionDef skip{"skip_op", {}};
        for (const auto& s : skip_pairs[static_cast<std::size_t>(b)]) skip.values.emplace_back(s);
        block.dims.push_back(std::move(skip));
        block.dims.push_back(DimensionDef{"op_type", {CatalogValue{std::string("relu")},
                                                      CatalogValue{std::string("tanh")},
                                                      CatalogValue{std::string("silu")}}});
        block.dims.push_back(DimensionDef{"layer_count", {CatalogValue{1.0}, CatalogValue{2.0}}});
        block.dims.push_back(DimensionDef{"width_mult", {CatalogValue{0.5}, CatalogValue{1.0}}});
        block.dims.push_back(DimensionDef{"se_ratio", {CatalogValue{0.0}, CatalogValue{0.25}}});
        blocks.push_back(std::move(block));
    }
    return SearchSpaceDef("mobile-analog-35x77", std::move(blocks));
}

int OneHotVector::popcount() const {
    int n = 0;
    for (auto b : bits) n += (b != 0);
    return n;
}

ArchitectureConfig decode(const std::vector<int>& decision_seq, const SearchSpaceDef& space) {
    if (decision_seq.size() != static_cast<std::size_t>(space.dim_count())) {
        throw LengthMismatch(decision_seq.size(), static_cast<std::size_t>(space.dim_count()));
    }
    for (int d = 0; d < space.dim_count(); ++d) {
        const int v = decision_seq[static_cast<std::size_t>(d)];
        if (v < 0 || v >= space.cardinality(d)) {
            throw IndexOutOfCatalog(d, v, space.cardinality(d));
        }
    }
    return ArchitectureConfig{decision_seq, space.identity()};
}

namespace {

void require_same_space(const ArchitectureConfig& arch, const SearchSpaceDef& space) {
    if (arch.space_id != space.identity()) {
        throw SpaceMismatch("architecture was decoded against a different search space");
    }
}

}  // namespace

OneHotVector encode_onehot(const ArchitectureConfig& arch, const SearchSpaceDef& space) {
    require_same_space(arch, space);
    OneHotVector out;
    out.bits.assign(static_cast<std::size_t>(space.onehot_length()), 0);
    for (int d = 0; d < space.dim_count(); ++d) {
        const int v = arch.decisions[static_cast<std::size_t>(d)];
        out.bits[static_cast<std::size_t>(space.segment_offset(d) + v)] = 1;
    }
    return out;
}

ArchitectureConfig decode_onehot(const OneHotVector& onehot, const SearchSpaceDef& space) {
    if (onehot.bits.size() != static_cast<std::size_t>(space.onehot_length())) {
        throw LengthMismatch(onehot.bits.size(), static_cast<std::size_t>(space.onehot_length()));
    }
    std::vector<int> decisions(static_cast<std::size_t>(space.dim_count()), -1);
    for (int d = 0; d < space.dim_count(); ++d) {
        const int off = space.segment_offset(d);
        int hit = -1;
        for (int v = 0; v < space.cardinality(d); ++v) {
            if (onehot.bits[static_cast<std::size_t>(off + v)]) {
                if (hit >= 0) throw ConfigError("one-hot segment with more than one bit set");
                hit = v;
            }
        }
        if (hit < 0) throw ConfigError("one-hot segment with no bit set");
        decisions[static_cast<std::size_t>(d)] = hit;
    }
    return ArchitectureConfig{std::move(decisions), space.identity()};
}

ArchitectureConfig random_sample(const SearchSpaceDef& space, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    std::vector<int> decisions(static_cast<std::size_t>(space.dim_count()));
    for (int d = 0; d < space.dim_count(); ++d) {
        decisions[static_cast<std::size_t>(d)] =
            static_cast<int>(rng.next_index(static_cast<std::uint64_t>(space.cardinality(d))));
    }
    return ArchitectureConfig{std::move(decisions), space.identity()};
}

double arch_distance(const ArchitectureConfig& a, const ArchitectureConfig& b,
                     const SearchSpaceDef& space, DistanceMetric metric) {
    require_same_space(a, space);
    if (a.space_id != b.space_id) {
        throw SpaceMismatch("architectures come from different search spaces");
    }
    int differing = 0;
    for (int d = 0; d < space.dim_count(); ++d) {
        if (a.decisions[static_cast<std::size_t>(d)] != b.decisions[static_cast<std::size_t>(d)]) {
            ++differing;
        }
    }
    if (metric == DistanceMetric::hamming) return static_cast<double>(differing);
    // Each differing dimension flips two bits of the one-hot expansion.
    return std::sqrt(2.0 * static_cast<double>(differing));
}

std::vector<std::vector<int>> enumerate_all(const SearchSpaceDef& space, std::size_t cap) {
    const std::size_t n = space.size_capped(cap);
    if (n > cap) throw ConfigError("search space too large to enumerate");
    std::vector<std::vector<int>> out;
    out.reserve(n);
    std::vector<int> current(static_cast<std::size_t>(space.dim_count()), 0);
    while (true) {
        out.push_back(current);
        int d = space.dim_count() - 1;
        while (d >= 0) {
            if (++current[static_cast<std::size_t>(d)] < space.cardinality(d)) break;
            current[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) break;
    }
    return out;
}

}  // namespace kdnas::space
