#include "kgr/graph.hpp"

#include <algorithm>
#include <cmath>

#include "kgr/error.hpp"

namespace kgr {

EntityId KnowledgeGraph::intern_entity(const std::string& name) {
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    const auto id = static_cast<EntityId>(entity_names_.size());
    entity_names_.push_back(name);
    entity_ids_.emplace(name, id);
    return id;
}

RelationId KnowledgeGraph::intern_relation(const std::string& name) {
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    const auto id = static_cast<RelationId>(relation_names_.size());
    relation_names_.push_back(name);
    relation_ids_.emplace(name, id);
    return id;
}

ClassId KnowledgeGraph::intern_class(const std::string& name) {
    auto it = class_ids_.find(name);
    if (it != class_ids_.end()) return it->second;
    const auto id = static_cast<ClassId>(class_names_.size());
    class_names_.push_back(name);
    class_ids_.emplace(name, id);
    return id;
}

bool KnowledgeGraph::add_triple(const Triple& t) {
    if (t.head >= num_entities() || t.tail >= num_entities() || t.relation >= num_relations()) {
        throw DataError("triple index out of range");
    }
    if (!triple_set_.insert(t).second) return false;
    triples_.push_back(t);
    pair_set_.insert((static_cast<std::uint64_t>(t.head) << 32) | t.tail);
    return true;
}

bool KnowledgeGraph::add_triple(const std::string& head, const std::string& relation,
                                const std::string& tail) {
    const EntityId h = intern_entity(head);
    const RelationId r = intern_relation(relation);
    const EntityId t = intern_entity(tail);
    return add_triple(Triple{h, r, t});
}

void KnowledgeGraph::set_label(const std::string& entity, const std::string& class_name) {
    const auto id = entity_id(entity);
    if (!id) throw DataError("label references unseen entity '" + entity + "'");
    labels_[*id] = intern_class(class_name);
}

void KnowledgeGraph::set_label(EntityId entity, ClassId cls) {
    if (entity >= num_entities()) throw DataError("label entity index out of range");
    if (cls >= num_classes()) throw DataError("label class index out of range");
    labels_[entity] = cls;
}

std::optional<EntityId> KnowledgeGraph::entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<ClassId> KnowledgeGraph::label(EntityId e) const {
    auto it = labels_.find(e);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::vector<EntityId>> KnowledgeGraph::skeleton() const {
    std::vector<std::vector<EntityId>> adj(num_entities());
    for (const Triple& t : triples_) {
        if (t.head == t.tail) continue;
        adj[t.head].push_back(t.tail);
        adj[t.tail].push_back(t.head);
    }
    for (auto& nbrs : adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return adj;
}

std::vector<std::size_t> KnowledgeGraph::in_degrees() const {
    std::vector<std::size_t> deg(num_entities(), 0);
    for (const Triple& t : triples_) ++deg[t.tail];
    return deg;
}

TripleSplit split_triples(const KnowledgeGraph& kg, double train_frac, double valid_frac,
                          std::uint64_t seed) {
    if (kg.num_triples() == 0) throw DataError("cannot split a graph with no triples");
    if (train_frac <= 0.0 || train_frac > 1.0) throw DataError("train_frac must be in (0, 1]");
    if (valid_frac < 0.0 || train_frac + valid_frac > 1.0 + 1e-12) {
        throw DataError("train_frac + valid_frac must not exceed 1");
    }

    const std::size_t n = kg.num_triples();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    // Coverage pass: first triple (in shuffled order) touching an uncovered
    // entity or relation is pinned to train.
    std::vector<char> ent_covered(kg.num_entities(), 0);
    std::vector<char> rel_covered(kg.num_relations(), 0);
    std::vector<Triple> train, rest;
    train.reserve(n);
    for (std::size_t i : order) {
        const Triple& t = kg.triples()[i];
        if (!ent_covered[t.head] || !ent_covered[t.tail] || !rel_covered[t.relation]) {
            ent_covered[t.head] = ent_covered[t.tail] = 1;
            rel_covered[t.relation] = 1;
            train.push_back(t);
        } else {
            rest.push_back(t);
        }
    }

    const auto target_train = static_cast<std::size_t>(std::llround(train_frac * n));
    const auto target_valid = static_cast<std::size_t>(std::llround(valid_frac * n));
    TripleSplit split;
    split.seed = seed;
    split.train = std::move(train);
    for (const Triple& t : rest) {
        if (split.train.size() < target_train) {
            split.train.push_back(t);
        } else if (split.valid.size() < target_valid) {
            split.valid.push_back(t);
        } else {
            split.test.push_back(t);
        }
    }
    // Requested sizes may leave a remainder in neither valid nor test.
    return split;
}

Triple corrupt_triple(const KnowledgeGraph& kg, const Triple& t, CorruptMode mode, Rng& rng) {
    if (kg.num_entities() < 2) throw DataError("corruption needs at least 2 entities");
    const auto n = static_cast<std::uint64_t>(kg.num_entities());
    for (int attempt = 0; attempt < 1000; ++attempt) {
        bool corrupt_head = mode == CorruptMode::head;
        if (mode == CorruptMode::either) corrupt_head = rng.next_below(2) == 0;
        const auto e = static_cast<EntityId>(rng.next_below(n));
        Triple cand = t;
        if (corrupt_head) {
            if (e == t.head) continue;
            cand.head = e;
        } else {
            if (e == t.tail) continue;
            cand.tail = e;
        }
        if (!kg.has_triple(cand)) return cand;
    }
    throw SaturationError("no negative found after 1000 corruption attempts");
}

std::vector<std::pair<EntityId, EntityId>> sample_negative_edges(const KnowledgeGraph& kg,
                                                                 std::size_t count, Rng& rng) {
    if (kg.num_entities() < 2 && count > 0) throw DataError("negative edges need at least 2 entities");
    std::vector<std::pair<EntityId, EntityId>> out;
    out.reserve(count);
    const auto n = static_cast<std::uint64_t>(kg.num_entities());
    while (out.size() < count) {
        bool found = false;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const auto u = static_cast<EntityId>(rng.next_below(n));
            const auto v = static_cast<EntityId>(rng.next_below(n));
            if (u == v || kg.has_edge(u, v)) continue;
            out.emplace_back(u, v);
            found = true;
            break;
        }
        if (!found) throw SaturationError("no negative edge found after 1000 attempts");
    }
    return out;
}

namespace {

// Floor allocation per split, then move items from the largest split into any
// requested-but-empty one.
void allocate(std::size_t m, double train_frac, double valid_frac, std::size_t& nt,
              std::size_t& nv) {
    nt = static_cast<std::size_t>(train_frac * m + 1e-9);
    nv = static_cast<std::size_t>(valid_frac * m + 1e-9);
    if (nt + nv > m) nv = m - nt;
}

}  // namespace

NodeSplit split_nodes(const KnowledgeGraph& kg, double train_frac, double valid_frac,
                      std::uint64_t seed) {
    if (kg.num_labeled() == 0) throw DataError("no labeled entities to split");
    if (train_frac <= 0.0 || train_frac > 1.0 || valid_frac < 0.0 ||
        train_frac + valid_frac > 1.0 + 1e-12) {
        throw DataError("invalid node split fractions");
    }

    std::vector<std::vector<EntityId>> by_class(kg.num_classes());
    std::vector<EntityId> labeled;
    for (EntityId e = 0; e < kg.num_entities(); ++e) {
        if (auto c = kg.label(e)) {
            by_class[*c].push_back(e);
            labeled.push_back(e);
        }
    }
    bool stratify = kg.num_classes() >= 1;
    for (const auto& members : by_class) {
        if (!members.empty() && members.size() < 3) stratify = false;
    }

    Rng rng(seed);
    NodeSplit split;
    split.seed = seed;
    auto emit = [&](std::vector<EntityId>& pool) {
        rng.shuffle(pool);
        std::size_t nt = 0, nv = 0;
        allocate(pool.size(), train_frac, valid_frac, nt, nv);
        split.train.insert(split.train.end(), pool.begin(), pool.begin() + nt);
        split.valid.insert(split.valid.end(), pool.begin() + nt, pool.begin() + nt + nv);
        split.test.insert(split.test.end(), pool.begin() + nt + nv, pool.end());
    };
    if (stratify) {
        for (auto& members : by_class) {
            if (!members.empty()) emit(members);
        }
    } else {
        emit(labeled);
    }

    // Nonempty repair for genuinely requested splits.
    const double test_frac = 1.0 - train_frac - valid_frac;
    if (labeled.size() >= 3) {
        auto largest = [&]() -> std::vector<EntityId>* {
            std::vector<EntityId>* best = &split.train;
            if (split.valid.size() > best->size()) best = &split.valid;
            if (split.test.size() > best->size()) best = &split.test;
            return best;
        };
        auto repair = [&](std::vector<EntityId>& part, double frac) {
            if (frac <= 0.0 || !part.empty()) return;
            auto* src = largest();
            if (src->size() > 1) {
                part.push_back(src->back());
                src->pop_back();
            }
        };
        repair(split.valid, valid_frac);
        repair(split.test, test_frac);
    }
    return split;
}

KnowledgeGraph generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_entities < 2) throw DataError("synthetic graphs need at least 2 entities");
    KnowledgeGraph kg;
    for (std::size_t i = 0; i < spec.n_entities; ++i) kg.intern_entity("e" + std::to_string(i));

    std::size_t needed_relations = 1;
    if (spec.structure == SyntheticStructure::grid) needed_relations = 2;
    if (spec.structure == SyntheticStructure::two_block) needed_relations = 3;
    const std::size_t n_rel = std::max(spec.n_relations, needed_relations);
    for (std::size_t r = 0; r < n_rel; ++r) kg.intern_relation("r" + std::to_string(r));

    Rng rng(spec.seed);
    const auto n = static_cast<EntityId>(spec.n_entities);
    switch (spec.structure) {
        case SyntheticStructure::cycle:
            for (EntityId i = 0; i < n; ++i) kg.add_triple(Triple{i, 0, (i + 1u) % n});
            break;
        case SyntheticStructure::grid: {
            const auto side = static_cast<EntityId>(std::ceil(std::sqrt(static_cast<double>(n))));
            for (EntityId i = 0; i < n; ++i) {
                if ((i + 1) % side != 0 && i + 1 < n) kg.add_triple(Triple{i, 0, i + 1});
                if (i + side < n) kg.add_triple(Triple{i, 1, i + side});
            }
            break;
        }
        case SyntheticStructure::two_block: {
            const EntityId half = n / 2;
            kg.intern_class("block0");
            kg.intern_class("block1");
            for (EntityId e = 0; e < n; ++e) kg.set_label(e, e < half ? 0u : 1u);
            for (EntityId u = 0; u < n; ++u) {
                for (EntityId v = u + 1; v < n; ++v) {
                    const bool same = (u < half) == (v < half);
                    const double p = same ? 0.5 : 0.02;
                    if (rng.next_double() < p) {
                        const RelationId rel = same ? (u < half ? 0u : 1u) : 2u;
                        kg.add_triple(Triple{u, rel, v});
                    }
                }
            }
            break;
        }
    }

    const auto extra = static_cast<std::size_t>(std::llround(spec.noise_frac * kg.num_triples()));
    for (std::size_t k = 0; k < extra; ++k) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            const Triple t{static_cast<EntityId>(rng.next_below(n)),
                           static_cast<RelationId>(rng.next_below(n_rel)),
                           static_cast<EntityId>(rng.next_below(n))};
            if (!kg.has_triple(t)) {
                kg.add_triple(t);
                break;
            }
        }
    }
    return kg;
}

}  // namespace kgr
