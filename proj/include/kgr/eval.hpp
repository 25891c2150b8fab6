#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/kge.hpp"
#include "kgr/report.hpp"

namespace kgr {

using ScoreFn = std::function<double(const Triple&)>;

enum class RankSetting { raw, filtered };

// (h, r, ?) when predict_tail, else (?, r, t); `fixed` is the known slot.
struct RankQuery {
    EntityId fixed;
    RelationId relation;
    bool predict_tail;
};

// Mean-rank tie policy: 1 + #strictly-better + round-half-up(#ties / 2).
// Filtered setting drops candidates (other than truth) whose completion is in
// known_triples.
int rank_entity(const ScoreFn& scorer, std::size_t n_entities, const RankQuery& query,
                EntityId truth, RankSetting setting, const TripleSet& known_triples);

struct RankMetrics {
    double mrr = 0.0;
    std::map<int, double> hits;  // K in {1, 3, 10}
};

RankMetrics rank_metrics(std::span<const int> ranks);

// Ties broken by original index (stable order); requires at least one positive.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct ThresholdModel {
    double delta = 0.0;
    double validation_accuracy = 0.0;
};

// Maximizes validation accuracy over midpoints of consecutive distinct scores
// plus below-min/above-max sentinels; ties resolve to the largest delta.
// classify(s) = positive iff s > delta.
ThresholdModel tune_threshold(std::span<const double> scores, std::span<const int> labels);

// Head+tail ranks for every test triple, raw and filtered against the whole
// split (train + valid + test). Keys: lp.rank.{raw,filtered}.{mrr,hits1,hits3,hits10}.
MetricsReport evaluate_lp_rank(const EmbeddingModel& model, const TripleSplit& split);

// AP over test positives and corrupt_triple negatives. Key: lp.thresh.ap.
MetricsReport evaluate_lp_threshold(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                    const TripleSplit& split, int negatives_per_positive,
                                    std::uint64_t seed);

}  // namespace kgr
