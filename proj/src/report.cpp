/* Copyright 2026 The HatCL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hatcl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hatcl/errors.hpp"

namespace hatcl {

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%#.6g", value);
  return buf;
}

void AccuracyMatrix::add_row(std::vector<double> accuracies) {
  if (rows_.size() >= tasks_) throw StateError("accuracy matrix is full");
  if (accuracies.size() != rows_.size() + 1) {
    throw DimensionError("accuracy row " + std::to_string(rows_.size()) +
                         " needs " + std::to_string(rows_.size() + 1) +
                         " values, got " + std::to_string(accuracies.size()));
  }
  for (double a : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("accuracy outside [0, 1]");
  }
  rows_.push_back(std::move(accuracies));
}

double AccuracyMatrix::at(std::size_t trained, std::size_t evaluated) const {
  if (evaluated > trained) {
    throw std::out_of_range("accuracy matrix is lower-triangular");
  }
  return rows_.at(trained).at(evaluated);
}

std::string accuracy_csv(const AccuracyMatrix& matrix) {
  std::ostringstream out;
  out << "task_trained,task_evaluated,accuracy\n";
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      out << r << "," << c << "," << format_real(matrix.at(r, c)) << "\n";
    }
  }
  return out.str();
}

std::string labelled_row_csv(const std::string& label,
                             const std::vector<double>& accuracies) {
  std::ostringstream out;
  out << "task_trained,task_evaluated,accuracy\n";
  for (std::size_t c = 0; c < accuracies.size(); ++c) {
    out << label << "," << c << "," << format_real(accuracies[c]) << "\n";
  }
  return out.str();
}

namespace {

std::string percent(double accuracy) { return format_real(100.0 * accuracy) + "%"; }

}  // namespace

std::string accuracy_markdown(const AccuracyMatrix& matrix,
                              std::span<const LabelledRow> extra) {
  std::ostringstream out;
  out << "|";
  for (std::size_t c = 0; c < matrix.tasks(); ++c) out << " | Task " << c << " Acc.";
  out << " |\n|---";
  for (std::size_t c = 0; c < matrix.tasks(); ++c) out << "|---";
  out << "|\n";
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << "| After Training on Task " << r;
    for (std::size_t c = 0; c < matrix.tasks(); ++c) {
      out << " | " << (c <= r ? percent(matrix.at(r, c)) : "-");
    }
    out << " |\n";
  }
  for (const LabelledRow& row : extra) {
    out << "| " << row.label;
    for (std::size_t c = 0; c < matrix.tasks(); ++c) {
      const bool has = c < row.accuracies.size() && row.accuracies[c];
      out << " | " << (has ? percent(*row.accuracies[c]) : "-");
    }
    out << " |\n";
  }
  return out.str();
}

std::string toy_metrics_csv(std::span<const ToyRecord> records) {
  std::ostringstream out;
  out << "repeat,strategy,batches,completed\n";
  for (const ToyRecord& r : records) {
    out << r.repeat << "," << r.strategy << "," << r.batches << ","
        << (r.completed ? 1 : 0) << "\n";
  }
  return out.str();
}

std::vector<ToySummary> summarize_toy(std::span<const ToyRecord> records) {
  std::vector<ToySummary> out;
  for (const ToyRecord& r : records) {
    ToySummary* s = nullptr;
    for (ToySummary& existing : out) {
      if (existing.strategy == r.strategy) s = &existing;
    }
    if (s == nullptr) {
      out.push_back({r.strategy, 0.0, 0, 0});
      s = &out.back();
    }
    s->mean_batches += static_cast<double>(r.batches);
    s->completed += r.completed ? 1 : 0;
    ++s->repeats;
  }
  for (ToySummary& s : out) s.mean_batches /= static_cast<double>(s.repeats);
  return out;
}

std::string toy_markdown(std::span<const ToySummary> summary) {
  std::ostringstream out;
  out << "| Strategy | Avg. Number of Batches | Completed |\n|---|---|---|\n";
  for (const ToySummary& s : summary) {
    out << "| " << s.strategy << " | " << format_real(s.mean_batches) << " | "
        << s.completed << "/" << s.repeats << " |\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace hatcl
