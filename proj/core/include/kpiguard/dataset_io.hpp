#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kpiguard/kpi.hpp"

namespace kpiguard {

// Exact dataset header; decode rejects anything else byte-for-byte.
inline constexpr std::string_view kDatasetHeader =
    "Timestamp,UEid,UEThpUl,PrbUsedUl,UEThpDl,PrbUsedDl,TotNbrUl_per_sec,"
    "TotNbrDl_per_sec";
inline constexpr std::string_view kDatasetHeaderLabeled =
    "Timestamp,UEid,UEThpUl,PrbUsedUl,UEThpDl,PrbUsedDl,TotNbrUl_per_sec,"
    "TotNbrDl_per_sec,Label";

struct DecodedDataset {
  Dataset records;
  std::optional<std::vector<Label>> labels;
};

// Serializes the dataset as CSV: throughputs with 6 decimal places, count
// fields as plain integers, rows in (Timestamp, UEid) order. Passing labels
// appends the Label column. Throws OrderingError on unsorted input.
void encode_dataset(std::ostream& out, const Dataset& dataset,
                    const std::vector<Label>* labels = nullptr);
std::string encode_dataset(const Dataset& dataset,
                           const std::vector<Label>* labels = nullptr);

// Parses a dataset file, tolerating the absent Label column. Errors carry the
// offending line: FormatError (bad header / wrong field count), ParseError
// (non-numeric field), DomainError (negative value), OrderingError.
DecodedDataset decode_dataset(std::istream& in);
DecodedDataset decode_dataset(const std::string& text);

void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<Label>* labels = nullptr);
DecodedDataset load_dataset(const std::filesystem::path& path);

}  // namespace kpiguard
