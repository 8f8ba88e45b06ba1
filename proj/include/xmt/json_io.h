#ifndef XMT_JSON_IO_H_
#define XMT_JSON_IO_H_

#include <string>

#include "json.hpp"
#include "xmt/attack.h"
#include "xmt/disentangle.h"
#include "xmt/explain.h"
#include "xmt/inverse.h"
#include "xmt/types.h"
#include "xmt/xeval.h"

namespace xmt {

// Insertion-ordered JSON value; all report emitters use it so key order
// is fixed by construction.
using ojson = nlohmann::ordered_json;

// Doubles rendered with 9 significant digits (%.9g); non-finite -> "null".
std::string format_double(double v);

// Deterministic writer: insertion key order, 9-significant-digit floats,
// 2-space indent. dump_json_line emits the compact single-line form used
// for JSONL records.
std::string dump_json(const ojson& j, int indent = 2);
std::string dump_json_line(const ojson& j);

ojson explanation_to_json(const std::string& id, const TokenSeq& tokens,
                          const Explanation& e);

ojson plausibility_to_json(const PlausibilityReport& r);
PlausibilityReport plausibility_from_json(const ojson& j);

ojson attack_result_to_json(const AttackResult& r);
ojson attack_stats_to_json(const AttackStats& st);
ojson checklist_to_json(const ChecklistRun& run);

ojson inverse_to_json(const InverseResult& r);

ojson disentangle_to_json(const DisentangleReport& r);

}  // namespace xmt

#endif  // XMT_JSON_IO_H_
