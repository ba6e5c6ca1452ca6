#include "railcrowd/store.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace railcrowd {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'I', 'L', 'C', 'R', 'W', 'D'};

constexpr std::uint32_t tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

constexpr std::uint32_t kMeta = tag("META");
constexpr std::uint32_t kModel = tag("MODL");
constexpr std::uint32_t kTables = tag("LOCT");
constexpr std::uint32_t kDest = tag("DEST");

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  void section(std::uint32_t t, const Writer& body) {
    u32(t);
    u64(body.buf_.size());
    buf_.append(body.buf_);
  }
  const std::string& bytes() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  Reader sub(std::uint64_t n) {
    need(n);
    Reader r(p_, static_cast<std::size_t>(n));
    p_ += n;
    return r;
  }
  bool done() const { return p_ == end_; }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  void need(std::uint64_t n) const {
    if (n > static_cast<std::uint64_t>(end_ - p_)) throw ArchiveError("archive is corrupt: section overruns its bounds");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[i])) << (8 * i);
    p_ += n;
    return v;
  }
  const char* p_;
  const char* end_;
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const std::size_t chunk = std::min<std::size_t>(n, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(chunk));
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void check_against_topology(const NetworkTopology& topology, const OperationalDatabase& db) {
  const std::size_t n = topology.station_count();
  const WalkVariableIndex index(topology);
  if (db.model.size() != index.size()) {
    throw ArchiveError("model has " + std::to_string(db.model.size()) + " walk variables, topology has " +
                       std::to_string(index.size()));
  }
  for (const LocationTable& t : db.tables) {
    const Route& r = t.route();
    if (idx(r.from) >= n || idx(r.to) >= n) throw ArchiveError("location table refers to a station outside the topology");
    for (const Action& a : r.actions) {
      const std::size_t limit = a.kind == ActionKind::move       ? topology.segment_count()
                                : a.kind == ActionKind::transfer ? topology.transfer_count()
                                                                 : topology.platform_count();
      if (a.ref >= limit) throw ArchiveError("location table route does not belong to this topology");
    }
  }
  if (db.destinations.station_count() != n) {
    throw ArchiveError("destination table was built for a different station count");
  }
}

}  // namespace

ArchiveSummary save_archive(const std::string& path, const NetworkTopology& topology, const OperationalDatabase& db) {
  check_against_topology(topology, db);

  Writer meta;
  meta.u64(topology.fingerprint());
  meta.i64(db.built_at);
  meta.f64(db.parameters.step);
  meta.u64(db.parameters.horizon);
  meta.u64(db.parameters.samples);
  meta.i64(db.parameters.bin_width);
  meta.u64(db.parameters.seed);

  Writer model;
  model.u32(static_cast<std::uint32_t>(db.model.size()));
  for (const WalkVariableModel& v : db.model.variables) {
    model.str(v.name);
    model.f64(v.mean);
    model.f64(v.variance);
    model.f64(v.gamma.shape);
    model.f64(v.gamma.scale);
    model.u8(v.identified ? 1 : 0);
  }

  Writer tables;
  tables.u32(static_cast<std::uint32_t>(db.tables.size()));
  for (const LocationTable& t : db.tables) {
    const Route& r = t.route();
    tables.u32(static_cast<std::uint32_t>(idx(r.from)));
    tables.u32(static_cast<std::uint32_t>(idx(r.to)));
    tables.u32(static_cast<std::uint32_t>(idx(r.entry)));
    tables.u32(static_cast<std::uint32_t>(idx(r.exit)));
    tables.u32(static_cast<std::uint32_t>(r.actions.size()));
    for (const Action& a : r.actions) {
      tables.u8(static_cast<std::uint8_t>(a.kind));
      tables.u32(a.ref);
    }
    tables.f64(t.step());
    tables.u32(static_cast<std::uint32_t>(t.horizon()));
    tables.u64(t.samples());
    for (std::uint32_t c : t.raw_counts()) tables.u32(c);
    for (double p : t.raw_probabilities()) tables.f64(p);
  }

  Writer dest;
  const DestinationTable& d = db.destinations;
  dest.u32(static_cast<std::uint32_t>(d.station_count()));
  dest.i64(d.bin_width());
  std::uint64_t cells = 0;
  Writer cell_bytes;
  for (std::size_t s = 0; s < d.station_count(); ++s) {
    for (std::size_t b = 0; b < d.bin_count(); ++b) {
      for (std::size_t t = 0; t < d.station_count(); ++t) {
        const auto times = d.travel_times(make_id<StationId>(s), b, make_id<StationId>(t));
        if (times.empty()) continue;
        ++cells;
        cell_bytes.u32(static_cast<std::uint32_t>(s));
        cell_bytes.u32(static_cast<std::uint32_t>(b));
        cell_bytes.u32(static_cast<std::uint32_t>(t));
        cell_bytes.u64(times.size());
        for (double x : times) cell_bytes.f64(x);
      }
    }
  }
  dest.u64(cells);
  dest.raw(cell_bytes.bytes().data(), cell_bytes.bytes().size());

  Writer file;
  file.raw(kMagic, sizeof kMagic);
  file.u32(kArchiveVersion);
  file.section(kMeta, meta);
  file.section(kModel, model);
  file.section(kTables, tables);
  file.section(kDest, dest);
  file.u32(crc_of(file.bytes().data(), file.bytes().size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write archive '" + path + "'");
  out.write(file.bytes().data(), static_cast<std::streamsize>(file.bytes().size()));
  out.close();
  if (!out) throw ArchiveError("failed writing archive '" + path + "'");

  ArchiveSummary summary;
  summary.fingerprint = topology.fingerprint();
  summary.bytes = file.bytes().size();
  summary.variables = db.model.size();
  summary.location_tables = db.tables.size();
  summary.destination_records = d.record_count();
  summary.destination_empty = d.empty();
  return summary;
}

OperationalDatabase load_archive(const std::string& path, const NetworkTopology& topology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open archive '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    if (bytes.size() >= sizeof kMagic && std::memcmp(bytes.data(), kMagic, sizeof kMagic) == 0) {
      throw ArchiveError("archive checksum error: file is truncated");
    }
    throw ArchiveError("'" + path + "' is not a table archive");
  }
  const std::size_t body = bytes.size() - 4;
  Reader trailer(bytes.data() + body, 4);
  if (trailer.u32() != crc_of(bytes.data(), body)) {
    throw ArchiveError("archive checksum error: file is corrupt or truncated");
  }

  Reader rd(bytes.data() + sizeof kMagic, body - sizeof kMagic);
  const std::uint32_t version = rd.u32();
  if (version != kArchiveVersion) {
    throw ArchiveError("unsupported archive version " + std::to_string(version) + " (expected " +
                       std::to_string(kArchiveVersion) + ")");
  }

  OperationalDatabase db;
  bool have_meta = false, have_model = false, have_tables = false, have_dest = false;
  while (!rd.done()) {
    const std::uint32_t t = rd.u32();
    Reader sec = rd.sub(rd.u64());
    if (t == kMeta) {
      const std::uint64_t fp = sec.u64();
      if (fp != topology.fingerprint()) {
        throw ArchiveError("archive topology fingerprint mismatch: archive was built for a different network");
      }
      db.built_at = sec.i64();
      db.parameters.step = sec.f64();
      db.parameters.horizon = sec.u64();
      db.parameters.samples = sec.u64();
      db.parameters.bin_width = sec.i64();
      db.parameters.seed = sec.u64();
      have_meta = true;
    } else if (t == kModel) {
      const std::uint32_t n = sec.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        WalkVariableModel v;
        v.name = sec.str();
        v.mean = sec.f64();
        v.variance = sec.f64();
        v.gamma.shape = sec.f64();
        v.gamma.scale = sec.f64();
        v.identified = sec.u8() != 0;
        db.model.variables.push_back(std::move(v));
      }
      have_model = true;
    } else if (t == kTables) {
      const std::uint32_t n = sec.u32();
      db.tables.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        Route r;
        r.from = make_id<StationId>(sec.u32());
        r.to = make_id<StationId>(sec.u32());
        r.entry = make_id<PlatformId>(sec.u32());
        r.exit = make_id<PlatformId>(sec.u32());
        const std::uint32_t m = sec.u32();
        for (std::uint32_t c = 0; c < m; ++c) {
          const std::uint8_t kind = sec.u8();
          if (kind > 3) throw ArchiveError("archive is corrupt: bad action kind");
          r.actions.push_back({static_cast<ActionKind>(kind), sec.u32()});
        }
        const double step = sec.f64();
        const std::uint32_t horizon = sec.u32();
        const std::uint64_t samples = sec.u64();
        const std::size_t count_len = static_cast<std::size_t>(m + 1) * horizon;
        const std::size_t prob_len = static_cast<std::size_t>(m) * horizon;
        if (sec.remaining() < count_len * 4 + prob_len * 8) throw ArchiveError("archive is corrupt: short table");
        std::vector<std::uint32_t> counts(count_len);
        for (auto& c : counts) c = sec.u32();
        LocationTable table(std::move(r), step, horizon, samples, std::move(counts));
        const auto probs = table.raw_probabilities();
        for (std::size_t k = 0; k < prob_len; ++k) {
          if (std::bit_cast<std::uint64_t>(sec.f64()) != std::bit_cast<std::uint64_t>(probs[k])) {
            throw ArchiveError("archive is corrupt: stored probabilities disagree with stored counts");
          }
        }
        db.tables.push_back(std::move(table));
      }
      have_tables = true;
    } else if (t == kDest) {
      const std::uint32_t n = sec.u32();
      const Timestamp width = sec.i64();
      if (width <= 0) throw ArchiveError("archive is corrupt: bad bin width");
      DestinationTable table(n, width);
      const std::uint64_t cells = sec.u64();
      for (std::uint64_t c = 0; c < cells; ++c) {
        const auto from = make_id<StationId>(sec.u32());
        const std::uint32_t bin = sec.u32();
        const auto to = make_id<StationId>(sec.u32());
        const std::uint64_t len = sec.u64();
        if (idx(from) >= n || idx(to) >= n || bin >= table.bin_count()) {
          throw ArchiveError("archive is corrupt: destination cell out of range");
        }
        if (sec.remaining() < len * 8) throw ArchiveError("archive is corrupt: short destination cell");
        for (std::uint64_t k = 0; k < len; ++k) table.insert(from, bin, to, sec.f64());
      }
      table.finalize();
      db.destinations = std::move(table);
      have_dest = true;
    }
    // Unknown sections are skipped.
  }
  if (!have_meta || !have_model || !have_tables || !have_dest) {
    throw ArchiveError("archive is missing a required section");
  }
  check_against_topology(topology, db);
  return db;
}

}  // namespace railcrowd
