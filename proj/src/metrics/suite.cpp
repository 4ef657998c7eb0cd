// Copyright 2026 The vda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "vda/csv.hpp"
#include "vda/error.hpp"
#include "vda/metrics.hpp"

namespace vda::metrics {
namespace {

struct NamedMetric {
  const char* name;
  Metric metric;
};
constexpr NamedMetric kNames[] = {
    {"stoi", Metric::kStoi}, {"snr_seg", Metric::kSnrSeg}, {"fw_snr_seg", Metric::kFwSnrSeg},
    {"llr", Metric::kLlr},   {"wss", Metric::kWss},        {"csii", Metric::kCsii},
    {"ncm", Metric::kNcm},
};

const char* const kColumns[] = {"utterance_id", "G", "C", "D", "stoi", "snr_seg", "fw_snr_seg",
                                "llr", "wss", "csii_high", "csii_mid", "csii_low", "ncm", "pesq",
                                "csig", "cbak", "covl"};

}  // namespace

MetricSelection MetricSelection::parse(std::string_view list) {
  MetricSelection s;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view name = list.substr(pos, comma - pos);
    pos = comma + 1;
    if (name.empty()) continue;
    if (name == "all") return all();
    bool known = false;
    for (const auto& n : kNames) {
      if (name == n.name) {
        s.add(n.metric);
        known = true;
      }
    }
    if (!known) throw ConfigError(fmt::format("unknown metric '{}'", name));
  }
  if (s.empty()) throw ConfigError("metric selection is empty");
  return s;
}

Composite composite(double llr, double wss, double snr_seg, double pesq) {
  if (!(pesq >= -0.5 && pesq <= 4.5)) throw PreconditionError("composite: pesq outside [-0.5, 4.5]");
  Composite c;
  c.csig = 3.093 - 1.029 * llr + 0.603 * pesq - 0.009 * wss;
  c.cbak = 1.634 + 0.478 * pesq - 0.007 * wss + 0.063 * snr_seg;
  c.covl = 1.594 + 0.805 * pesq - 0.512 * llr - 0.007 * wss;
  return c;
}

MetricReport evaluate_pair(const AlignedPair& pair, std::optional<double> external_pesq,
                           const MetricSelection& selection) {
  MetricReport rep;
  std::vector<std::string> failures;
  ErrorKind kind = ErrorKind::kNumerical;

  auto run = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (failures.empty()) kind = e.kind();
      failures.push_back(fmt::format("{}: {}", name, e.what()));
    }
  };
  // The composite needs llr, wss and snr_seg whether or not they were selected.
  const bool need_composite = external_pesq.has_value();
  std::optional<double> llr_v, wss_v, snr_v;

  if (selection.has(Metric::kStoi)) run("stoi", [&] { rep.stoi = stoi(pair); });
  if (selection.has(Metric::kSnrSeg) || need_composite) run("snr_seg", [&] { snr_v = snr_seg(pair); });
  if (selection.has(Metric::kFwSnrSeg)) run("fw_snr_seg", [&] { rep.fw_snr_seg = fw_snr_seg(pair); });
  if (selection.has(Metric::kLlr) || need_composite) run("llr", [&] { llr_v = llr(pair); });
  if (selection.has(Metric::kWss) || need_composite) run("wss", [&] { wss_v = wss(pair); });
  if (selection.has(Metric::kCsii)) run("csii", [&] { rep.csii = csii(pair); });
  if (selection.has(Metric::kNcm)) run("ncm", [&] { rep.ncm = ncm(pair); });

  if (selection.has(Metric::kSnrSeg)) rep.snr_seg = snr_v;
  if (selection.has(Metric::kLlr)) rep.llr = llr_v;
  if (selection.has(Metric::kWss)) rep.wss = wss_v;
  if (need_composite && llr_v && wss_v && snr_v) {
    run("composite", [&] {
      rep.composite = composite(*llr_v, *wss_v, *snr_v, *external_pesq);
      rep.pesq = external_pesq;
    });
  }
  if (!failures.empty()) {
    std::string msg = "metric failures:";
    for (const auto& f : failures) msg += " [" + f + "]";
    throw Error(kind, msg);
  }
  return rep;
}

std::string metrics_csv_header() {
  std::vector<std::string> cols(std::begin(kColumns), std::end(kColumns));
  return csv::join(cols);
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    auto opt = [](const std::optional<double>& v) { return csv::number(v); };
    std::optional<double> hi, mid, lo, csig, cbak, covl;
    if (r.csii) {
      hi = r.csii->high;
      mid = r.csii->mid;
      lo = r.csii->low;
    }
    if (r.composite) {
      csig = r.composite->csig;
      cbak = r.composite->cbak;
      covl = r.composite->covl;
    }
    out += csv::join({row.utterance_id, std::to_string(row.label.g), std::to_string(row.label.c),
                      std::to_string(row.label.d), opt(r.stoi), opt(r.snr_seg), opt(r.fw_snr_seg),
                      opt(r.llr), opt(r.wss), opt(hi), opt(mid), opt(lo), opt(r.ncm), opt(r.pesq),
                      opt(csig), opt(cbak), opt(covl)});
    out += '\n';
  }
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  std::size_t col[std::size(kColumns)];
  for (std::size_t i = 0; i < std::size(kColumns); ++i) {
    auto c = t.column(kColumns[i]);
    if (!c) throw SchemaError(fmt::format("metrics CSV: missing column '{}'", kColumns[i]));
    col[i] = *c;
  }
  std::vector<MetricRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string ctx = fmt::format("metrics CSV row {}", r + 1);
    auto num = [&](int i) { return csv::parse_number(f[col[i]], ctx); };
    auto bit = [&](int i) {
      auto v = num(i);
      if (!v || (*v != 0.0 && *v != 1.0)) throw ValueError(ctx + ": indicator must be 0 or 1");
      return int(*v);
    };
    MetricRow row;
    row.utterance_id = f[col[0]];
    row.label = {bit(1), bit(2), bit(3)};
    auto& rep = row.report;
    rep.stoi = num(4);
    rep.snr_seg = num(5);
    rep.fw_snr_seg = num(6);
    rep.llr = num(7);
    rep.wss = num(8);
    auto hi = num(9), mid = num(10), lo = num(11);
    if (hi || mid || lo) rep.csii = Csii{hi, mid, lo};
    rep.ncm = num(12);
    rep.pesq = num(13);
    auto csig = num(14), cbak = num(15), covl = num(16);
    if (csig && cbak && covl) rep.composite = Composite{*csig, *cbak, *covl};
    row.failed = !rep.stoi && !rep.snr_seg && !rep.fw_snr_seg && !rep.llr && !rep.wss &&
                 !rep.csii && !rep.ncm && !rep.composite;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vda::metrics
