#include "kgr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgr/error.hpp"

namespace kgr {

int rank_entity(const ScoreFn& scorer, std::size_t n_entities, const RankQuery& query,
                EntityId truth, RankSetting setting, const TripleSet& known_triples) {
    if (truth >= n_entities) throw DataError("truth entity out of range");
    auto completion = [&](EntityId e) {
        return query.predict_tail ? Triple{query.fixed, query.relation, e}
                                  : Triple{e, query.relation, query.fixed};
    };
    const double truth_score = scorer(completion(truth));
    std::size_t better = 0, ties = 0;
    for (EntityId e = 0; e < n_entities; ++e) {
        if (e == truth) continue;
        if (setting == RankSetting::filtered && known_triples.contains(completion(e))) continue;
        const double s = scorer(completion(e));
        if (s > truth_score) {
            ++better;
        } else if (s == truth_score) {
            ++ties;
        }
    }
    // round half up on ties/2
    return static_cast<int>(1 + better + (ties + 1) / 2);
}

RankMetrics rank_metrics(std::span<const int> ranks) {
    if (ranks.empty()) throw DataError("rank_metrics requires at least one rank");
    RankMetrics m;
    double inv_sum = 0.0;
    std::map<int, std::size_t> counts{{1, 0}, {3, 0}, {10, 0}};
    for (int r : ranks) {
        inv_sum += 1.0 / static_cast<double>(r);
        for (auto& [k, c] : counts) {
            if (r <= k) ++c;
        }
    }
    m.mrr = inv_sum / static_cast<double>(ranks.size());
    for (auto& [k, c] : counts) {
        m.hits[k] = static_cast<double>(c) / static_cast<double>(ranks.size());
    }
    return m;
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("scores/labels length mismatch");
    std::size_t positives = 0;
    for (int l : labels) positives += l != 0;
    if (positives == 0) throw DataError("average precision undefined without positives");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]] != 0) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return ap / static_cast<double>(positives);
}

ThresholdModel tune_threshold(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw DataError("tune_threshold requires matching nonempty scores/labels");
    }
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l != 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw DataError("tune_threshold requires both classes");

    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(distinct.front() - 1.0);  // everything positive
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    }
    candidates.push_back(distinct.back() + 1.0);  // everything negative

    ThresholdModel best{candidates.front(), -1.0};
    for (double delta : candidates) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool positive = scores[i] > delta;
            if (positive == (labels[i] != 0)) ++correct;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(scores.size());
        if (acc > best.validation_accuracy ||
            (acc == best.validation_accuracy && delta > best.delta)) {
            best = {delta, acc};
        }
    }
    return best;
}

MetricsReport evaluate_lp_rank(const EmbeddingModel& model, const TripleSplit& split) {
    if (split.test.empty()) throw DataError("evaluate_lp_rank requires a nonempty test set");
    TripleSet known;
    for (const auto* part : {&split.train, &split.valid, &split.test}) {
        for (const Triple& t : *part) known.insert(t);
    }
    const ScoreFn scorer = [&](const Triple& t) { return score(model, t); };
    const std::size_t n = model.num_entities();

    std::vector<int> raw, filtered;
    raw.reserve(2 * split.test.size());
    filtered.reserve(2 * split.test.size());
    for (const Triple& t : split.test) {
        const RankQuery tail_q{t.head, t.relation, true};
        const RankQuery head_q{t.tail, t.relation, false};
        raw.push_back(rank_entity(scorer, n, tail_q, t.tail, RankSetting::raw, known));
        raw.push_back(rank_entity(scorer, n, head_q, t.head, RankSetting::raw, known));
        filtered.push_back(rank_entity(scorer, n, tail_q, t.tail, RankSetting::filtered, known));
        filtered.push_back(rank_entity(scorer, n, head_q, t.head, RankSetting::filtered, known));
    }

    MetricsReport report;
    report.task = "lp-rank";
    report.seed = split.seed;
    auto emit = [&](const std::string& prefix, const std::vector<int>& ranks) {
        const RankMetrics m = rank_metrics(ranks);
        report.metrics[prefix + ".mrr"] = m.mrr;
        for (const auto& [k, v] : m.hits) {
            report.metrics[prefix + ".hits" + std::to_string(k)] = v;
        }
    };
    emit("lp.rank.raw", raw);
    emit("lp.rank.filtered", filtered);
    return report;
}

MetricsReport evaluate_lp_threshold(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                    const TripleSplit& split, int negatives_per_positive,
                                    std::uint64_t seed) {
    if (split.test.empty()) throw DataError("evaluate_lp_threshold requires a nonempty test set");
    Rng rng(seed);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const Triple& t : split.test) {
        scores.push_back(score(model, t));
        labels.push_back(1);
        for (int i = 0; i < negatives_per_positive; ++i) {
            scores.push_back(score(model, corrupt_triple(kg, t, CorruptMode::either, rng)));
            labels.push_back(0);
        }
    }
    // shuffle the pool so score ties do not resolve along label order
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<double> s2(scores.size());
    std::vector<int> l2(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        s2[i] = scores[order[i]];
        l2[i] = labels[order[i]];
    }

    MetricsReport report;
    report.task = "lp-thresh";
    report.seed = seed;
    report.metrics["lp.thresh.ap"] = average_precision(s2, l2);
    report.metrics["lp.thresh.positives"] = static_cast<double>(split.test.size());
    return report;
}

}  // namespace kgr
