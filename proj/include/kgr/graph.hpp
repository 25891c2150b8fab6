#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgr/rng.hpp"

namespace kgr {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using ClassId = std::uint32_t;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
        return static_cast<std::size_t>(splitmix64(x ^ (static_cast<std::uint64_t>(t.relation) << 17)));
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Interned entities/relations plus the triple set. Names are interned in
// first-appearance order; duplicate triples are collapsed. Immutable once
// built, safe to share read-only across threads.
class KnowledgeGraph {
public:
    EntityId intern_entity(const std::string& name);
    RelationId intern_relation(const std::string& name);
    ClassId intern_class(const std::string& name);

    // Returns false when the triple was already present.
    bool add_triple(const Triple& t);
    bool add_triple(const std::string& head, const std::string& relation, const std::string& tail);

    // Throws DataError when the entity name has not been interned.
    void set_label(const std::string& entity, const std::string& class_name);
    void set_label(EntityId entity, ClassId cls);

    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relation_names_.size(); }
    std::size_t num_triples() const { return triples_.size(); }
    std::size_t num_classes() const { return class_names_.size(); }
    std::size_t num_labeled() const { return labels_.size(); }

    const std::vector<Triple>& triples() const { return triples_; }
    const TripleSet& triple_set() const { return triple_set_; }
    bool has_triple(const Triple& t) const { return triple_set_.contains(t); }
    // True when any (u, r, v) exists, regardless of relation.
    bool has_edge(EntityId u, EntityId v) const {
        return pair_set_.contains((static_cast<std::uint64_t>(u) << 32) | v);
    }

    std::optional<EntityId> entity_id(const std::string& name) const;
    std::optional<RelationId> relation_id(const std::string& name) const;
    const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
    const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
    const std::string& class_name(ClassId id) const { return class_names_.at(id); }

    std::optional<ClassId> label(EntityId e) const;
    const std::unordered_map<EntityId, ClassId>& labels() const { return labels_; }

    // Undirected skeleton adjacency lists: deduplicated, self-loops dropped,
    // neighbor lists sorted ascending.
    std::vector<std::vector<EntityId>> skeleton() const;
    std::vector<std::size_t> in_degrees() const;

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::vector<std::string> class_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::unordered_map<std::string, ClassId> class_ids_;
    std::vector<Triple> triples_;
    TripleSet triple_set_;
    std::unordered_set<std::uint64_t> pair_set_;
    std::unordered_map<EntityId, ClassId> labels_;
};

struct TripleSplit {
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    std::uint64_t seed = 0;
};

struct NodeSplit {
    std::vector<EntityId> train;
    std::vector<EntityId> valid;
    std::vector<EntityId> test;
    std::uint64_t seed = 0;
};

// Coverage-first split: every entity/relation seen in valid or test also
// occurs in at least one train triple. Sizes land within one triple of the
// requested fractions unless coverage repairs inflate train.
TripleSplit split_triples(const KnowledgeGraph& kg, double train_frac, double valid_frac,
                          std::uint64_t seed);

enum class CorruptMode { head, tail, either };

// Uniform corruption of one slot, rejected until the result is absent from
// the whole graph. Throws SaturationError after 1000 attempts.
Triple corrupt_triple(const KnowledgeGraph& kg, const Triple& t, CorruptMode mode, Rng& rng);

// Uniform ordered non-edges (u, v), u != v, no (u, r, v) for any r.
std::vector<std::pair<EntityId, EntityId>> sample_negative_edges(const KnowledgeGraph& kg,
                                                                 std::size_t count, Rng& rng);

// Split over labeled entities, stratified by class when every class has at
// least 3 members.
NodeSplit split_nodes(const KnowledgeGraph& kg, double train_frac, double valid_frac,
                      std::uint64_t seed);

enum class SyntheticStructure { cycle, grid, two_block };

struct SyntheticSpec {
    std::size_t n_entities = 0;
    std::size_t n_relations = 1;
    SyntheticStructure structure = SyntheticStructure::cycle;
    double noise_frac = 0.0;
    std::uint64_t seed = 0;
};

KnowledgeGraph generate_synthetic(const SyntheticSpec& spec);

}  // namespace kgr
