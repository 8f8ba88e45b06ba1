#ifndef XMT_HEATMAP_H_
#define XMT_HEATMAP_H_

#include <string>

#include "xmt/attack.h"
#include "xmt/explain.h"
#include "xmt/types.h"

namespace xmt {

// Writes a self-contained HTML page coloring the explained segment's
// tokens by signed relevance (blue negative, white zero, red positive)
// with a min/max legend. Throws DataError on unwritable paths. Output is
// deterministic; re-emission overwrites byte-identically.
void emit_heatmap(const Sample& s, const Explanation& e, const std::string& path);

// Side-by-side original vs adversarial hypothesis with changed tokens
// highlighted, plus score/class movement. Same error and determinism
// contract as emit_heatmap.
void emit_attack_diff(const Sample& s, const AttackResult& r, const std::string& path);

}  // namespace xmt

#endif  // XMT_HEATMAP_H_
