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

#include "report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "domain.hpp"
#include "errors.hpp"

namespace rll {

Table::Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

void Table::add_row(std::vector<Json> cells) {
  if (cells.size() != columns_.size()) fail(ErrorCode::Shape, "table " + name_ + ": row width does not match header");
  rows_.push_back(std::move(cells));
}

const Json& Table::at(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) fail(ErrorCode::Index, "table " + name_ + " has no column " + column);
  return rows_.at(row)[static_cast<std::size_t>(it - columns_.begin())];
}

std::string format_cell(const Json& v) {
  switch (v.type()) {
    case Json::value_t::null: return "";
    case Json::value_t::boolean: return v.get<bool>() ? "true" : "false";
    case Json::value_t::number_float: return format_double(v.get<double>());
    case Json::value_t::number_integer: return std::to_string(v.get<long long>());
    case Json::value_t::number_unsigned: return std::to_string(v.get<unsigned long long>());
    case Json::value_t::string: {
      const auto& s = v.get_ref<const std::string&>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    }
    default: return v.dump();
  }
}

std::string Table::csv() const {
  std::string out;
  for (std::size_t j = 0; j < columns_.size(); ++j) out += (j ? "," : "") + columns_[j];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + format_cell(row[j]);
    out += '\n';
  }
  return out;
}

Json Table::to_json() const {
  Json arr = Json::array();
  for (const auto& row : rows_) {
    Json obj = Json::object();
    for (std::size_t j = 0; j < row.size(); ++j) obj[columns_[j]] = row[j];
    arr.push_back(std::move(obj));
  }
  return arr;
}

Table& Report::table(const std::string& name) {
  for (auto& t : tables)
    if (t.name() == name) return t;
  fail(ErrorCode::Index, "report has no table " + name);
}

const Table& Report::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name() == name) return t;
  fail(ErrorCode::Index, "report has no table " + name);
}

std::string Report::json() const {
  Json j;
  j["schema"] = "v1";
  j["command"] = command;
  j["passed"] = passed;
  j["config"] = config;
  j["summary"] = summary;
  Json tabs = Json::object();
  for (const auto& t : tables) tabs[t.name()] = t.to_json();
  j["tables"] = std::move(tabs);
  return j.dump(2) + "\n";
}

std::string Report::text() const {
  std::string out;
  for (const auto& t : tables) {
    out += "[" + t.name() + "]\n";
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width(t.columns().size());
    for (std::size_t j = 0; j < width.size(); ++j) width[j] = t.columns()[j].size();
    for (std::size_t r = 0; r < t.size(); ++r) {
      std::vector<std::string> row;
      for (std::size_t j = 0; j < width.size(); ++j) {
        Json v = t.at(r, t.columns()[j]);
        std::string s;
        if (v.is_number_float()) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
          s = buf;
        } else {
          s = format_cell(v);
        }
        width[j] = std::max(width[j], s.size());
        row.push_back(std::move(s));
      }
      cells.push_back(std::move(row));
    }
    auto emit = [&](const std::vector<std::string>& row) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        out += row[j];
        if (j + 1 < row.size()) out += std::string(width[j] - row[j].size() + 2, ' ');
      }
      out += '\n';
    };
    emit(t.columns());
    for (const auto& row : cells) emit(row);
    out += '\n';
  }
  return out;
}

void Report::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto put = [&](const std::string& name, const std::string& contents) {
    std::ofstream out(dir / name, std::ios::binary);
    out << contents;
    if (!out) fail(ErrorCode::Io, "cannot write " + (dir / name).string());
  };
  put("report.json", json());
  for (const auto& t : tables) put(t.name() + ".csv", t.csv());
  for (const auto& [name, contents] : files) put(name, contents);
}

}  // namespace rll
