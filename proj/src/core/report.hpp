// Copyright 2026 The robust-loss-lab Authors.
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

#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

namespace rll {

using Json = nlohmann::ordered_json;

/// Named table emitted both as CSV and inside report.json.
class Table {
 public:
  Table(std::string name, std::vector<std::string> columns);

  void add_row(std::vector<Json> cells);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  const Json& at(std::size_t row, const std::string& column) const;

  std::string csv() const;
  Json to_json() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Json>> rows_;
};

struct Report {
  std::string command;
  bool passed = true;
  Json config = Json::object();
  Json summary = Json::object();
  std::vector<Table> tables;
  /// Extra artifacts written next to report.json (file name, contents).
  std::vector<std::pair<std::string, std::string>> files;

  Table& table(const std::string& name);
  const Table& table(const std::string& name) const;

  /// Schema "v1".
  std::string json() const;
  /// Fixed-width rendering of every table for terminals.
  std::string text() const;
  /// report.json, <table>.csv for each table, and each extra file.
  void write(const std::filesystem::path& dir) const;
};

std::string format_cell(const Json& v);

}  // namespace rll
