// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "kdnas/errors.hpp"

namespace kdnas::space {

// Catalog entries are either numeric (layer counts, width multipliers,
// squeeze ratios) or symbolic (operation and skip kinds).
using CatalogValue = std::variant<double, std::string>;

bool value_equals(const CatalogValue& a, const CatalogValue& b);
std::string value_to_string(const CatalogValue& v);

struct DimensionDef {
    std::string name;
    std::vector<CatalogValue> values;  // ordered, non-empty
};

struct BlockDef {
    int base_width = 0;  // micro-decoding base width; 0 when not decodable
    std::vector<DimensionDef> dims;
};

class IndexOutOfCatalog : public ConfigError {
public:
    IndexOutOfCatalog(int dimension, int value, int cardinality);
    int dimension;
    int value;
};

class LengthMismatch : public ConfigError {
public:
    LengthMismatch(std::size_t got, std::size_t expected);
};

class SpaceMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Factorized hierarchical search space: a fixed sequence of blocks, each
// declaring an ordered list of categorical decision dimensions. Flattened
// dimension order is block-major, declaration order within a block; the
// one-hot segment layout follows the flattened order. Immutable after
// construction and safe for unrestricted shared reads.
class SearchSpaceDef {
public:
    SearchSpaceDef(std::string name, std::vector<BlockDef> blocks);

    static SearchSpaceDef from_json_text(const std::string& text);
    static SearchSpaceDef from_file(const std::string& path);

    // The shipped default: 7 blocks x 5 decisions, 35 dimensions whose
    // cardinalities sum to 77.
    static SearchSpaceDef default_space();

    const std::string& name() const { return name_; }
    int schema_version() const { return schema_version_; }
    const std::vector<BlockDef>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }

    int dim_count() const { return static_cast<int>(dims_.size()); }       // D
    int onehot_length() const { return onehot_length_; }                   // E
    const DimensionDef& dim(int d) const { return *dims_[static_cast<std::size_t>(d)]; }
    int cardinality(int d) const;
    int segment_offset(int d) const { return segment_offsets_[static_cast<std::size_t>(d)]; }
    int dim_block(int d) const { return dim_block_[static_cast<std::size_t>(d)]; }

    // Content hash used as the space_ref identity carried by architectures.
    std::uint64_t identity() const { return identity_; }

    std::string to_json_text() const;

    // Number of distinct architectures, saturating at `cap`.
    std::size_t size_capped(std::size_t cap) const;

private:
    std::string name_;
    int schema_version_ = 1;
    std::vector<BlockDef> blocks_;
    std::vector<const DimensionDef*> dims_;  // flattened view into blocks_
    std::vector<int> segment_offsets_;
    std::vector<int> dim_block_;
    int onehot_length_ = 0;
    std::uint64_t identity_ = 0;
};

// One sampled student: a catalog index per flattened dimension, tagged
// with the identity of the space it was decoded against.
struct ArchitectureConfig {
    std::vector<int> decisions;
    std::uint64_t space_id = 0;

    bool operator==(const ArchitectureConfig&) const = default;
};

struct OneHotVector {
    std::vector<std::uint8_t> bits;

    int popcount() const;
    bool operator==(const OneHotVector&) const = default;
};

// Validates and stamps a raw decision sequence.
ArchitectureConfig decode(const std::vector<int>& decision_seq, const SearchSpaceDef& space);

// Expands an architecture into indicator coordinates (length E, one bit
// set per dimension segment).
OneHotVector encode_onehot(const ArchitectureConfig& arch, const SearchSpaceDef& space);

// Inverse of encode_onehot.
ArchitectureConfig decode_onehot(const OneHotVector& onehot, const SearchSpaceDef& space);

// Uniform over the product space; deterministic given seed.
ArchitectureConfig random_sample(const SearchSpaceDef& space, std::uint64_t rng_seed);

enum class DistanceMetric { hamming, onehot_l2 };

double arch_distance(const ArchitectureConfig& a, const ArchitectureConfig& b,
                     const SearchSpaceDef& space, DistanceMetric metric);

// All decision sequences of a small space, lexicographic. Throws
// ConfigError when the space has more than `cap` members.
std::vector<std::vector<int>> enumerate_all(const SearchSpaceDef& space, std::size_t cap = (1u << 20));

}  // namespace kdnas::space
