#include "xmt/heatmap.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "xmt/json_io.h"

namespace xmt {
namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// t in [-1, 1]: blue for negative, white at zero, red for positive.
std::string relevance_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  long shade = std::lround(std::abs(t) * 180.0);
  long r = 255, g = 255, b = 255;
  if (t >= 0) {
    g -= shade;
    b -= shade;
  } else {
    r -= shade;
    g -= shade;
  }
  return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," +
         std::to_string(b) + ")";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << content;
  f.flush();
  if (!f.good()) throw DataError("write failed: " + path);
}

const char* kStyle =
    "body{font-family:sans-serif;margin:2em;max-width:60em}"
    "h1{font-size:1.2em}"
    ".tok{display:inline-block;padding:2px 5px;margin:2px;border-radius:3px;"
    "border:1px solid #ddd}"
    ".meta{color:#555;font-size:0.9em}"
    ".legend .tok{border:1px solid #999}"
    "table{border-collapse:collapse;margin-top:1em}"
    "td,th{border:1px solid #ccc;padding:4px 8px;vertical-align:top}"
    ".chg{background:#fde68a;font-weight:bold}";

std::string page(const std::string& title, const std::string& body) {
  std::string out = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>";
  out += html_escape(title);
  out += "</title>\n<style>";
  out += kStyle;
  out += "</style>\n</head>\n<body>\n";
  out += body;
  out += "</body>\n</html>\n";
  return out;
}

}  // namespace

void emit_heatmap(const Sample& s, const Explanation& e, const std::string& path) {
  const TokenSeq& tokens = segment_tokens(s, e.segment);
  double max_abs = 0;
  for (double r : e.relevance) max_abs = std::max(max_abs, std::abs(r));

  std::string body = "<h1>Token relevance: sample " + html_escape(s.id) + "</h1>\n";
  body += "<p class=\"meta\">segment " + std::string(segment_name(e.segment)) +
          ", full score " + format_double(e.full_score) + ", baseline " +
          format_double(e.baseline_score) + "</p>\n<div>\n";
  std::size_t n = std::min(tokens.size(), e.relevance.size());
  for (std::size_t i = 0; i < n; ++i) {
    double t = max_abs > 0 ? e.relevance[i] / max_abs : 0.0;
    body += "<span class=\"tok\" style=\"background:" + relevance_color(t) +
            "\" title=\"" + format_double(e.relevance[i]) + "\">" +
            html_escape(tokens[i]) + "</span>\n";
  }
  body += "</div>\n";

  double lo = 0, hi = 0;
  if (!e.relevance.empty()) {
    lo = *std::min_element(e.relevance.begin(), e.relevance.end());
    hi = *std::max_element(e.relevance.begin(), e.relevance.end());
  }
  body += "<p class=\"legend\">min <span class=\"tok\" style=\"background:" +
          relevance_color(max_abs > 0 ? lo / max_abs : 0.0) + "\">" +
          format_double(lo) + "</span> max <span class=\"tok\" style=\"background:" +
          relevance_color(max_abs > 0 ? hi / max_abs : 0.0) + "\">" +
          format_double(hi) + "</span></p>\n";
  if (!e.notes.empty()) {
    body += "<ul class=\"meta\">\n";
    for (const auto& note : e.notes) body += "<li>" + html_escape(note) + "</li>\n";
    body += "</ul>\n";
  }
  write_file(path, page("Token relevance: " + s.id, body));
}

void emit_attack_diff(const Sample& s, const AttackResult& r, const std::string& path) {
  std::string body = "<h1>Adversarial edit: sample " + html_escape(r.sample_id) + "</h1>\n";
  body += "<p class=\"meta\">" + std::string(r.success ? "success" : "no class flip") +
          "; class " + std::to_string(r.orig_class) + " &rarr; " +
          std::to_string(r.new_class) + "; score " + format_double(r.orig_score) +
          " &rarr; " + format_double(r.new_score) + "; " +
          std::to_string(r.n_perturbed) + " token(s) changed; sentence similarity " +
          format_double(r.sent_sim) + "</p>\n";

  auto row = [&](const char* label, const TokenSeq& toks, const TokenSeq& other) {
    std::string cells = "<th>" + std::string(label) + "</th><td>";
    for (std::size_t i = 0; i < toks.size(); ++i) {
      bool changed = i >= other.size() || toks[i] != other[i];
      cells += changed ? "<span class=\"tok chg\">" : "<span class=\"tok\">";
      cells += html_escape(toks[i]);
      cells += "</span> ";
    }
    cells += "</td>";
    return "<tr>" + cells + "</tr>\n";
  };
  body += "<table>\n";
  body += row("original", s.hyp, r.hyp_star);
  body += row("adversarial", r.hyp_star, s.hyp);
  body += "</table>\n";
  write_file(path, page("Adversarial edit: " + r.sample_id, body));
}

}  // namespace xmt
