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

#ifndef HATCL_REPORT_HPP_
#define HATCL_REPORT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hatcl {

// Six significant digits with trailing zeros kept: 0.9965 -> "0.996500".
std::string format_real(double value);

/// Lower-triangular accuracy table: row r holds the accuracies on tasks 0..r
/// measured after training task r.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks) : tasks_(tasks) {}

  // Appends the row for the next trained task; needs exactly rows()+1 values.
  void add_row(std::vector<double> accuracies);

  std::size_t tasks() const { return tasks_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<double>& row(std::size_t r) const { return rows_.at(r); }
  double at(std::size_t trained, std::size_t evaluated) const;

 private:
  std::size_t tasks_ = 0;
  std::vector<std::vector<double>> rows_;
};

// Header `task_trained,task_evaluated,accuracy`, one line per cell.
std::string accuracy_csv(const AccuracyMatrix& matrix);

// A row measured after an event other than training, e.g. forgetting.
struct LabelledRow {
  std::string label;
  std::vector<std::optional<double>> accuracies;
};

// Same columns as accuracy_csv, with `label` in the task_trained column.
std::string labelled_row_csv(const std::string& label,
                             const std::vector<double>& accuracies);

// "After Training on Task r" rows, followed by any extra rows.
std::string accuracy_markdown(const AccuracyMatrix& matrix,
                              std::span<const LabelledRow> extra = {});

struct ToyRecord {
  std::size_t repeat = 0;
  std::string strategy;
  std::size_t batches = 0;
  bool completed = false;
};

// Header `repeat,strategy,batches,completed`.
std::string toy_metrics_csv(std::span<const ToyRecord> records);

struct ToySummary {
  std::string strategy;
  double mean_batches = 0.0;
  std::size_t completed = 0;
  std::size_t repeats = 0;
};

std::vector<ToySummary> summarize_toy(std::span<const ToyRecord> records);
std::string toy_markdown(std::span<const ToySummary> summary);

// Writes `contents` to `path`, throwing IoError naming the path on failure.
void write_file(const std::string& path, const std::string& contents);

}  // namespace hatcl

#endif  // HATCL_REPORT_HPP_
