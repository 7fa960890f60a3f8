// Copyright 2026 The spap Authors. All Rights Reserved.
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

#include <spap/container.hpp>

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace spap {

namespace {

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t checked_u32(std::size_t v, const char* what)
{
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw IoError(std::string("container: ") + what + " exceeds 32-bit range");
    }
    return static_cast<std::uint32_t>(v);
}

class Reader
{
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what)
    {
        if (bytes_.size() - pos_ < n) {
            throw IoError(std::string("container: truncated while reading ") + what);
        }
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint32_t u32(const char* what)
    {
        const auto s = take(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

    std::uint64_t u64(const char* what)
    {
        const auto s = take(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_container(const std::vector<NamedMatrix>& entries)
{
    std::set<std::string> names;
    std::string out(container_magic);
    put_u32(out, checked_u32(entries.size(), "entry count"));
    for (const auto& e : entries) {
        if (!names.insert(e.name).second) {
            throw IoError("container: duplicate entry name '" + e.name + "'");
        }
        put_u32(out, checked_u32(e.name.size(), "name length"));
        out += e.name;
        put_u32(out, checked_u32(static_cast<std::size_t>(e.value.rows()), "rows"));
        put_u32(out, checked_u32(static_cast<std::size_t>(e.value.cols()), "cols"));
        for (Index i = 0; i < e.value.rows(); ++i)
            for (Index j = 0; j < e.value.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(e.value(i, j)));
    }
    return out;
}

std::vector<NamedMatrix> decode_container(std::string_view bytes)
{
    Reader r(bytes);
    if (r.take(container_magic.size(), "magic") != container_magic) {
        throw IoError("container: bad magic, expected SPAPWT01");
    }
    const std::uint32_t count = r.u32("entry count");
    std::vector<NamedMatrix> entries;
    std::set<std::string> names;
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedMatrix e;
        const std::uint32_t len = r.u32("name length");
        e.name = std::string(r.take(len, "name"));
        if (!names.insert(e.name).second) {
            throw IoError("container: duplicate entry name '" + e.name + "'");
        }
        const std::uint64_t rows = r.u32("rows");
        const std::uint64_t cols = r.u32("cols");
        if (rows * cols > r.remaining() / 8) {
            throw IoError("container: truncated data for entry '" + e.name + "'");
        }
        e.value.resize(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index i = 0; i < e.value.rows(); ++i)
            for (Index j = 0; j < e.value.cols(); ++j) e.value(i, j) = std::bit_cast<double>(r.u64("value"));
        if (!e.value.allFinite()) {
            throw IoError("container: entry '" + e.name + "' holds NaN or Inf");
        }
        entries.push_back(std::move(e));
    }
    if (r.remaining() != 0) throw IoError("container: trailing bytes after last entry");
    return entries;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_container(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries)
{
    write_file_atomic(path, encode_container(entries));
}

std::vector<NamedMatrix> read_container(const std::filesystem::path& path)
{
    return decode_container(read_file(path));
}

const NamedMatrix* find_entry(const std::vector<NamedMatrix>& entries, std::string_view name)
{
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

std::vector<NamedMatrix> model_to_entries(const ToyModel& model)
{
    std::vector<NamedMatrix> out;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const std::string prefix = "layers." + std::to_string(i) + ".";
        out.push_back({prefix + "up", model.layers[i].w_up});
        out.push_back({prefix + "gate", model.layers[i].w_gate});
        out.push_back({prefix + "down", model.layers[i].w_down});
    }
    return out;
}

ToyModel model_from_entries(const std::vector<NamedMatrix>& entries, bool residual)
{
    ToyModel model;
    model.residual = residual;
    for (std::size_t i = 0;; ++i) {
        const std::string prefix = "layers." + std::to_string(i) + ".";
        const auto* up = find_entry(entries, prefix + "up");
        const auto* gate = find_entry(entries, prefix + "gate");
        const auto* down = find_entry(entries, prefix + "down");
        if (!up && !gate && !down) break;
        if (!up || !gate || !down) {
            throw IoError("container: layer " + std::to_string(i) + " is missing up, gate or down");
        }
        try {
            model.layers.emplace_back(up->value, gate->value, down->value);
        } catch (const Error& e) {
            throw IoError("container: layer " + std::to_string(i) + ": " + e.what());
        }
    }
    if (model.layers.empty()) throw IoError("container: no layers.<i>.* entries found");
    model.validate();
    return model;
}

}  // namespace spap
