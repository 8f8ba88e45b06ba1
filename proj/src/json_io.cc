#include "xmt/json_io.h"

#include <cmath>
#include <cstdio>

namespace xmt {
namespace {

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

// indent < 0 selects the compact single-line form.
void dump_rec(const ojson& j, int indent, int depth, std::string& out) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent) * d, ' ');
  };
  switch (j.type()) {
    case ojson::value_t::null:
      out += "null";
      break;
    case ojson::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case ojson::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      break;
    case ojson::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      break;
    case ojson::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case ojson::value_t::string:
      append_escaped(out, j.get_ref<const std::string&>());
      break;
    case ojson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& el : j) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        dump_rec(el, indent, depth + 1, out);
      }
      newline(depth);
      out.push_back(']');
      break;
    }
    case ojson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        append_escaped(out, it.key());
        out += indent < 0 ? ":" : ": ";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out.push_back('}');
      break;
    }
    default:
      out += "null";
      break;
  }
}

ojson tokens_json(const TokenSeq& tokens) {
  ojson a = ojson::array();
  for (const auto& t : tokens) a.push_back(t);
  return a;
}

ojson doubles_json(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string dump_json(const ojson& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

std::string dump_json_line(const ojson& j) {
  std::string out;
  dump_rec(j, -1, 0, out);
  return out;
}

ojson explanation_to_json(const std::string& id, const TokenSeq& tokens,
                          const Explanation& e) {
  ojson j;
  j["id"] = id;
  j["segment"] = segment_name(e.segment);
  j["tokens"] = tokens_json(tokens);
  j["relevance"] = doubles_json(e.relevance);
  j["full_score"] = e.full_score;
  j["baseline_score"] = e.baseline_score;
  ojson notes = ojson::array();
  for (const auto& n : e.notes) notes.push_back(n);
  j["notes"] = notes;
  return j;
}

ojson plausibility_to_json(const PlausibilityReport& r) {
  ojson j;
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["id"] = row.id;
    o["auc"] = row.auc;
    o["ap"] = row.ap;
    o["recall_topk"] = row.recall_topk;
    o["acc1"] = row.acc1;
    rows.push_back(o);
  }
  j["rows"] = rows;
  j["skipped"] = r.skipped;
  ojson reasons;
  for (const auto& [k, v] : r.skip_reasons) reasons[k] = v;
  j["skip_reasons"] = reasons.is_null() ? ojson::object() : reasons;
  j["mean_auc"] = r.mean_auc;
  j["mean_ap"] = r.mean_ap;
  j["mean_recall_topk"] = r.mean_recall_topk;
  j["mean_acc1"] = r.mean_acc1;
  return j;
}

PlausibilityReport plausibility_from_json(const ojson& j) {
  PlausibilityReport r;
  try {
    for (const auto& o : j.at("rows")) {
      PlausibilityReport::Row row;
      row.id = o.at("id").get<std::string>();
      row.auc = o.at("auc").get<double>();
      row.ap = o.at("ap").get<double>();
      row.recall_topk = o.at("recall_topk").get<double>();
      row.acc1 = o.at("acc1").get<int>();
      r.rows.push_back(std::move(row));
    }
    r.skipped = j.at("skipped").get<int>();
    for (auto it = j.at("skip_reasons").begin(); it != j.at("skip_reasons").end(); ++it) {
      r.skip_reasons[it.key()] = it.value().get<int>();
    }
    r.mean_auc = j.at("mean_auc").get<double>();
    r.mean_ap = j.at("mean_ap").get<double>();
    r.mean_recall_topk = j.at("mean_recall_topk").get<double>();
    r.mean_acc1 = j.at("mean_acc1").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("plausibility report: ") + ex.what());
  }
  return r;
}

ojson attack_result_to_json(const AttackResult& r) {
  ojson j;
  j["sample_id"] = r.sample_id;
  j["success"] = r.success;
  j["hyp_star"] = tokens_json(r.hyp_star);
  j["orig_class"] = r.orig_class;
  j["new_class"] = r.new_class;
  j["orig_score"] = r.orig_score;
  j["new_score"] = r.new_score;
  j["n_perturbed"] = r.n_perturbed;
  j["sent_sim"] = r.sent_sim;
  return j;
}

ojson attack_stats_to_json(const AttackStats& st) {
  ojson j;
  j["n_total"] = st.n_total;
  j["n_success"] = st.n_success;
  j["success_rate"] = st.success_rate;
  j["perturbation_rate"] =
      st.perturbation_rate ? ojson(*st.perturbation_rate) : ojson(nullptr);
  j["sentence_similarity"] =
      st.sentence_similarity ? ojson(*st.sentence_similarity) : ojson(nullptr);
  return j;
}

ojson checklist_to_json(const ChecklistRun& run) {
  ojson j;
  ojson cells = ojson::array();
  for (const auto& c : run.cells) {
    ojson o;
    o["sample_id"] = c.sample_id;
    o["template"] = c.template_name;
    o["applicable"] = c.applicable;
    o["metric_drop"] = c.metric_drop;
    o["normalized_score"] = c.normalized_score;
    cells.push_back(o);
  }
  j["cells"] = cells;
  ojson means = ojson::object();
  for (const auto& [name, v] : run.mean_score_per_template) means[name] = v;
  j["mean_score_per_template"] = means;
  j["skipped"] = run.skipped;
  return j;
}

ojson inverse_to_json(const InverseResult& r) {
  ojson j;
  j["target"] = r.target;
  j["hyp_star"] = tokens_json(r.hyp_star);
  j["achieved_score"] = r.achieved_score;
  j["objective"] = r.objective;
  ojson mask = ojson::array();
  for (int v : r.mask) mask.push_back(v);
  j["mask"] = mask;
  j["iterations_run"] = r.iterations_run;
  j["best_objective_trace"] = doubles_json(r.best_objective_trace);
  return j;
}

ojson disentangle_to_json(const DisentangleReport& r) {
  ojson j;
  ojson factors = ojson::array();
  for (std::size_t i = 0; i < r.factor_names.size(); ++i) {
    ojson f;
    f["name"] = r.factor_names[i];
    f["coefficient"] = r.coefficients[i];
    f["constant"] = static_cast<bool>(r.constant_factors[i]);
    factors.push_back(f);
  }
  j["factors"] = factors;
  j["intercept"] = r.intercept;
  j["r_squared"] = r.r_squared;
  j["ridge_applied"] = r.ridge_applied;
  j["excluded_samples"] = r.excluded_samples;
  ojson zp = ojson::object();
  for (const auto& [name, ms] : r.zscore_params) {
    ojson o;
    o["mean"] = ms.first;
    o["std"] = ms.second;
    zp[name] = o;
  }
  j["zscore_params"] = zp;
  return j;
}

}  // namespace xmt
