#include "kgr/io.hpp"

#include <json.hpp>

#include "kgr/error.hpp"

namespace kgr {

namespace {

bool skippable(const std::string& line) {
    return line.empty() || line[0] == '#';
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

TripleFormat parse_format(const std::string& name) {
    if (name == "tsv") return TripleFormat::tsv;
    if (name == "json-lines" || name == "jsonl") return TripleFormat::jsonl;
    throw ConfigError("unknown triple format '" + name + "'");
}

std::string format_name(TripleFormat f) {
    return f == TripleFormat::tsv ? "tsv" : "json-lines";
}

IngestResult ingest_triples(std::istream& in, TripleFormat format) {
    IngestResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (skippable(line)) continue;
        if (format == TripleFormat::tsv) {
            const auto fields = split_tabs(line);
            if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
                throw ParseError("expected head<TAB>relation<TAB>tail", lineno);
            }
            if (!result.graph.add_triple(fields[0], fields[1], fields[2])) ++result.duplicates;
        } else {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(e.what(), lineno);
            }
            if (rec.contains("h")) {
                if (!rec.contains("r") || !rec.contains("t") || !rec["h"].is_string() ||
                    !rec["r"].is_string() || !rec["t"].is_string()) {
                    throw ParseError("triple record needs string fields h, r, t", lineno);
                }
                const std::string h = rec["h"], r = rec["r"], t = rec["t"];
                if (h.empty() || r.empty() || t.empty()) {
                    throw ParseError("empty name in triple record", lineno);
                }
                if (!result.graph.add_triple(h, r, t)) ++result.duplicates;
            } else if (rec.contains("e")) {
                if (!rec.contains("c") || !rec["e"].is_string() || !rec["c"].is_string()) {
                    throw ParseError("label record needs string fields e, c", lineno);
                }
                result.graph.set_label(rec["e"].get<std::string>(), rec["c"].get<std::string>());
                ++result.labels;
            } else {
                throw ParseError("record is neither a triple (h/r/t) nor a label (e/c)", lineno);
            }
        }
    }
    return result;
}

std::size_t ingest_labels(KnowledgeGraph& kg, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (skippable(line)) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("expected entity<TAB>class", lineno);
        }
        kg.set_label(fields[0], fields[1]);
        ++count;
    }
    return count;
}

void export_graph(const KnowledgeGraph& kg, std::ostream& out, TripleFormat format) {
    if (format == TripleFormat::tsv) {
        for (const Triple& t : kg.triples()) {
            out << kg.entity_name(t.head) << '\t' << kg.relation_name(t.relation) << '\t'
                << kg.entity_name(t.tail) << '\n';
        }
        return;
    }
    for (const Triple& t : kg.triples()) {
        nlohmann::ordered_json rec{{"h", kg.entity_name(t.head)},
                                   {"r", kg.relation_name(t.relation)},
                                   {"t", kg.entity_name(t.tail)}};
        out << rec.dump() << '\n';
    }
    // labels ordered by entity index for byte-stable output
    for (EntityId e = 0; e < kg.num_entities(); ++e) {
        if (auto c = kg.label(e)) {
            nlohmann::ordered_json rec{{"e", kg.entity_name(e)}, {"c", kg.class_name(*c)}};
            out << rec.dump() << '\n';
        }
    }
}

void export_labels(const KnowledgeGraph& kg, std::ostream& out) {
    for (EntityId e = 0; e < kg.num_entities(); ++e) {
        if (auto c = kg.label(e)) {
            out << kg.entity_name(e) << '\t' << kg.class_name(*c) << '\n';
        }
    }
}

}  // namespace kgr
