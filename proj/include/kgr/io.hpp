#pragma once

#include <iostream>
#include <string>

#include "kgr/graph.hpp"

namespace kgr {

enum class TripleFormat { tsv, jsonl };

TripleFormat parse_format(const std::string& name);
std::string format_name(TripleFormat f);

struct IngestResult {
    KnowledgeGraph graph;
    std::size_t duplicates = 0;
    std::size_t labels = 0;
};

// tsv: head<TAB>relation<TAB>tail, one per line, '#' comments.
// jsonl: {"h":..,"r":..,"t":..} triple records and {"e":..,"c":..} label records.
IngestResult ingest_triples(std::istream& in, TripleFormat format);

// Label file: entity<TAB>class. Throws DataError for unseen entities.
std::size_t ingest_labels(KnowledgeGraph& kg, std::istream& in);

void export_graph(const KnowledgeGraph& kg, std::ostream& out, TripleFormat format);
void export_labels(const KnowledgeGraph& kg, std::ostream& out);

}  // namespace kgr
