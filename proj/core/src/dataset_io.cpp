#include "kpiguard/dataset_io.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

void append_row(std::string& out, const KpiRecord& r, const Label* label) {
  char buf[192];
  int n = std::snprintf(buf, sizeof(buf),
                        "%" PRId64 ",%u,%.6f,%" PRId64 ",%.6f,%" PRId64
                        ",%" PRId64 ",%" PRId64,
                        r.timestamp, r.ue_id, r.ue_thp_ul, r.prb_used_ul,
                        r.ue_thp_dl, r.prb_used_dl, r.tot_nbr_ul_per_sec,
                        r.tot_nbr_dl_per_sec);
  out.append(buf, static_cast<std::size_t>(n));
  if (label != nullptr) {
    out.push_back(',');
    out.append(to_string(*label));
  }
  out.push_back('\n');
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::int64_t parse_int(std::string_view field, std::size_t line_no,
                       std::string_view column) {
  std::int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, "field " + std::string(column) + "='" +
                                  std::string(field) + "' is not an integer");
  }
  if (value < 0) {
    throw DomainError("line " + std::to_string(line_no) + ": field " +
                      std::string(column) + " is negative");
  }
  return value;
}

double parse_double(std::string_view field, std::size_t line_no,
                    std::string_view column) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, "field " + std::string(column) + "='" +
                                  std::string(field) + "' is not a number");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw DomainError("line " + std::to_string(line_no) + ": field " +
                      std::string(column) + " must be finite and >= 0");
  }
  return value;
}

}  // namespace

void encode_dataset(std::ostream& out, const Dataset& dataset,
                    const std::vector<Label>* labels) {
  out << encode_dataset(dataset, labels);
}

std::string encode_dataset(const Dataset& dataset,
                           const std::vector<Label>* labels) {
  if (!dataset_is_sorted(dataset)) {
    throw OrderingError("dataset rows must be sorted by (Timestamp, UEid)");
  }
  if (labels != nullptr && labels->size() != dataset.size()) {
    throw ShapeError("label count does not match record count");
  }
  std::string out;
  out.reserve(64 + dataset.size() * 64);
  out.append(labels != nullptr ? kDatasetHeaderLabeled : kDatasetHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    append_row(out, dataset[i], labels != nullptr ? &(*labels)[i] : nullptr);
  }
  return out;
}

DecodedDataset decode_dataset(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_dataset(buf.str());
}

DecodedDataset decode_dataset(const std::string& text) {
  std::string_view rest(text);
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (rest.empty()) return false;
    const std::size_t nl = rest.find('\n');
    if (nl == std::string_view::npos) {
      line = rest;
      rest = {};
    } else {
      line = rest.substr(0, nl);
      rest.remove_prefix(nl + 1);
    }
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(header)) {
    throw FormatError("empty input: expected dataset header");
  }
  bool labeled = false;
  if (header == kDatasetHeaderLabeled) {
    labeled = true;
  } else if (header != kDatasetHeader) {
    throw FormatError("unexpected dataset header: '" + std::string(header) +
                      "'");
  }

  DecodedDataset out;
  if (labeled) out.labels.emplace();
  const std::size_t expected_fields = labeled ? 9 : 8;
  std::string_view line;
  while (next_line(line)) {
    if (line.empty() && rest.empty()) break;  // trailing newline
    const auto fields = split_fields(line);
    if (fields.size() != expected_fields) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_fields) + " fields, got " +
                        std::to_string(fields.size()));
    }
    KpiRecord r;
    r.timestamp = parse_int(fields[0], line_no, "Timestamp");
    r.ue_id = static_cast<std::uint32_t>(parse_int(fields[1], line_no, "UEid"));
    r.ue_thp_ul = parse_double(fields[2], line_no, "UEThpUl");
    r.prb_used_ul = parse_int(fields[3], line_no, "PrbUsedUl");
    r.ue_thp_dl = parse_double(fields[4], line_no, "UEThpDl");
    r.prb_used_dl = parse_int(fields[5], line_no, "PrbUsedDl");
    r.tot_nbr_ul_per_sec = parse_int(fields[6], line_no, "TotNbrUl_per_sec");
    r.tot_nbr_dl_per_sec = parse_int(fields[7], line_no, "TotNbrDl_per_sec");
    if (!out.records.empty()) {
      const KpiRecord& prev = out.records.back();
      if (r.timestamp < prev.timestamp ||
          (r.timestamp == prev.timestamp && r.ue_id <= prev.ue_id)) {
        throw OrderingError("line " + std::to_string(line_no) +
                            ": rows are not sorted by (Timestamp, UEid)");
      }
    }
    if (labeled) {
      const std::string_view raw = fields[8];
      if (raw == "benign") {
        out.labels->push_back(Label::kBenign);
      } else if (raw == "poisoned") {
        out.labels->push_back(Label::kPoisoned);
      } else {
        throw ParseError(line_no,
                         "field Label='" + std::string(raw) +
                             "' is neither 'benign' nor 'poisoned'");
      }
    }
    out.records.push_back(r);
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<Label>* labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << encode_dataset(dataset, labels);
}

DecodedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return decode_dataset(in);
}

}  // namespace kpiguard
