#include "llsm/run.hpp"

#include <algorithm>
#include <cstdio>

#include <fcntl.h>
#include <unistd.h>

#include "llsm/io.hpp"

namespace llsm {

namespace {

constexpr char kRunMagic[8] = {'L', 'L', 'S', 'M', 'R', 'U', 'N', '1'};
constexpr std::size_t kHeaderSize = 16 + 8 + 8;  // magic(16) + version + entry_count

std::string header_bytes(u64 entry_count) {
    ByteWriter w;
    w.put_bytes(kRunMagic, 8);
    for (int i = 0; i < 8; ++i) w.put_u8(0);  // magic padding to 16 bytes
    w.put_u64(Run::kVersion);
    w.put_u64(entry_count);
    return w.take();
}

std::string fence_bytes(const std::vector<FencePointer>& fences) {
    ByteWriter w;
    w.put_u64(fences.size());
    for (const FencePointer& f : fences) {
        w.put_key(f.first_key);
        w.put_u64(f.block_index);
    }
    return w.take();
}

void fwrite_all(std::FILE* f, const void* p, std::size_t n, const std::filesystem::path& path) {
    if (std::fwrite(p, 1, n, f) != n) throw IoError("write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// RunBuilder

RunBuilder::RunBuilder(std::filesystem::path path, u64 n_expected, u32 entries_per_block,
                       double bits_per_key)
    : path_(std::move(path)), block_entries_(entries_per_block), bits_per_key_(bits_per_key) {
    if (block_entries_ == 0) throw std::invalid_argument("run: entries_per_block must be > 0");
    bloom_ = std::make_unique<BloomFilter>(
        BloomFilter::create(std::max<u64>(1, n_expected), bits_per_key));
    if (!path_.empty()) {
        tmp_path_ = path_;
        tmp_path_ += ".tmp";
        file_ = std::fopen(tmp_path_.c_str(), "wb+");
        if (!file_) throw IoError("cannot create " + tmp_path_.string());
        // Entry count is known only at finish(); reserve the header now and
        // rewrite it before computing the CRC of the final byte stream.
        std::string header = header_bytes(0);
        fwrite_all(file_, header.data(), header.size(), tmp_path_);
    }
}

RunBuilder::~RunBuilder() {
    if (file_) {
        std::fclose(file_);
        std::remove(tmp_path_.c_str());
    }
}

void RunBuilder::add(const Entry& entry) {
    if (have_last_ && !(last_key_ < entry.key)) {
        throw DataError("run builder: entries must be strictly sorted");
    }
    if (count_ % block_entries_ == 0) {
        fences_.push_back({entry.key, count_ / block_entries_});
    }
    bloom_->insert(entry.key);
    if (file_) {
        u8 buf[kEntrySize];
        std::memcpy(buf, entry.key.data(), kKeySize);
        std::memcpy(buf + kKeySize, entry.value.data(), kValueSize);
        fwrite_all(file_, buf, kEntrySize, tmp_path_);
    } else {
        mem_entries_.push_back(entry);
    }
    last_key_ = entry.key;
    have_last_ = true;
    ++count_;
}

void RunBuilder::abandon() {
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
        std::remove(tmp_path_.c_str());
    }
    mem_entries_.clear();
}

std::shared_ptr<Run> RunBuilder::finish() {
    if (count_ == 0) throw DataError("run builder: empty run");

    auto run = std::shared_ptr<Run>(new Run());
    run->entry_count_ = count_;
    run->block_entries_ = block_entries_;
    run->fences_ = fences_;
    run->bloom_ = std::move(bloom_);

    if (!file_) {
        run->min_key_ = mem_entries_.front().key;
        run->max_key_ = mem_entries_.back().key;
        run->entries_ = std::move(mem_entries_);
        return run;
    }

    std::string fences = fence_bytes(fences_);
    fwrite_all(file_, fences.data(), fences.size(), tmp_path_);
    if (std::fflush(file_) != 0) throw IoError("flush failed: " + tmp_path_.string());

    // Rewrite the header with the real entry count, then CRC the whole
    // stream and append it.
    std::string header = header_bytes(count_);
    if (std::fseek(file_, 0, SEEK_SET) != 0) throw IoError("seek failed: " + tmp_path_.string());
    fwrite_all(file_, header.data(), header.size(), tmp_path_);
    if (std::fflush(file_) != 0) throw IoError("flush failed: " + tmp_path_.string());

    int fd = ::fileno(file_);
    {
        Crc32 crc;
        std::vector<char> buf(1 << 16);
        if (std::fseek(file_, 0, SEEK_SET) != 0) throw IoError("seek failed");
        std::size_t got;
        while ((got = std::fread(buf.data(), 1, buf.size(), file_)) > 0) {
            crc.update(buf.data(), got);
        }
        if (std::ferror(file_)) throw IoError("read-back failed: " + tmp_path_.string());
        std::clearerr(file_);
        if (std::fseek(file_, 0, SEEK_END) != 0) throw IoError("seek failed");
        ByteWriter w;
        w.put_u32(crc.value());
        fwrite_all(file_, w.bytes().data(), 4, tmp_path_);
    }
    if (std::fflush(file_) != 0 || ::fsync(fd) != 0) {
        throw IoError("fsync failed: " + tmp_path_.string());
    }
    std::fclose(file_);
    file_ = nullptr;

    std::error_code ec;
    std::filesystem::rename(tmp_path_, path_, ec);
    if (ec) {
        std::filesystem::remove(tmp_path_);
        throw IoError("rename failed: " + path_.string());
    }

    std::filesystem::path bf_path = path_;
    bf_path += ".bf";
    run->bloom_->save(bf_path);

    run->path_ = path_;
    run->fd_ = ::open(path_.c_str(), O_RDONLY);
    if (run->fd_ < 0) throw IoError("cannot reopen " + path_.string());
    std::vector<Entry> block;
    run->load_block(0, block);
    run->min_key_ = block.front().key;
    run->load_block(run->block_count() - 1, block);
    run->max_key_ = block.back().key;
    return run;
}

// ---------------------------------------------------------------------------
// Run

Run::~Run() {
    if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<Run> Run::build_in_memory(std::vector<Entry> entries, u32 entries_per_block,
                                          double bits_per_key) {
    RunBuilder b({}, entries.size(), entries_per_block, bits_per_key);
    for (const Entry& e : entries) b.add(e);
    return b.finish();
}

std::shared_ptr<Run> Run::build_file(const std::filesystem::path& path,
                                     const std::vector<Entry>& entries, u32 entries_per_block,
                                     double bits_per_key) {
    RunBuilder b(path, entries.size(), entries_per_block, bits_per_key);
    for (const Entry& e : entries) b.add(e);
    return b.finish();
}

std::shared_ptr<Run> Run::open_file(const std::filesystem::path& path) {
    std::string data = read_file(path);
    if (data.size() < kHeaderSize + 4) throw DataError("run: file too short " + path.string());
    u32 stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<u32>(static_cast<u8>(data[data.size() - 4 + static_cast<std::size_t>(i)]))
                  << (8 * i);
    }
    if (crc32(data.data(), data.size() - 4) != stored) {
        throw DataError("run: CRC mismatch " + path.string());
    }
    ByteReader r(data.data(), data.size() - 4);
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kRunMagic, 8) != 0) throw DataError("run: bad magic " + path.string());
    u8 pad[8];
    r.get_bytes(pad, 8);
    if (r.get_u64() != kVersion) throw DataError("run: unsupported version " + path.string());

    auto run = std::shared_ptr<Run>(new Run());
    run->entry_count_ = r.get_u64();
    if (run->entry_count_ == 0) throw DataError("run: empty " + path.string());
    std::size_t entry_bytes = run->entry_count_ * kEntrySize;
    if (r.remaining() < entry_bytes + 8) throw DataError("run: truncated " + path.string());

    run->min_key_ = ByteReader(data.data() + kHeaderSize, kKeySize).get_key();
    run->max_key_ = ByteReader(data.data() + kHeaderSize + (run->entry_count_ - 1) * kEntrySize,
                               kKeySize)
                        .get_key();

    ByteReader fr(data.data() + kHeaderSize + entry_bytes,
                  data.size() - 4 - kHeaderSize - entry_bytes);
    u64 fence_count = fr.get_u64();
    run->fences_.resize(fence_count);
    for (u64 i = 0; i < fence_count; ++i) {
        run->fences_[i].first_key = fr.get_key();
        run->fences_[i].block_index = fr.get_u64();
    }
    if (fence_count == 0) throw DataError("run: no fences " + path.string());
    // The format stores no explicit block size; the second fence's first key
    // is by construction the entry at index block_entries, so its rank in the
    // (sorted, in-memory here) entry region recovers it exactly.
    if (fence_count == 1) {
        run->block_entries_ = static_cast<u32>(run->entry_count_);
    } else {
        const Key target = run->fences_[1].first_key;
        u64 lo = 0, hi = run->entry_count_;
        while (lo < hi) {
            u64 mid = lo + (hi - lo) / 2;
            Key k = ByteReader(data.data() + kHeaderSize + mid * kEntrySize, kKeySize).get_key();
            if (k < target) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if (lo == 0 || lo >= run->entry_count_) throw DataError("run: bad fence block");
        run->block_entries_ = static_cast<u32>(lo);
    }

    std::filesystem::path bf_path = path;
    bf_path += ".bf";
    run->bloom_ = std::make_unique<BloomFilter>(BloomFilter::load(bf_path));

    run->path_ = path;
    run->fd_ = ::open(path.c_str(), O_RDONLY);
    if (run->fd_ < 0) throw IoError("cannot open " + path.string());
    return run;
}

void Run::load_block(u64 block, std::vector<Entry>& out) const {
    u64 first = block * block_entries_;
    u64 count = std::min<u64>(block_entries_, entry_count_ - first);
    out.resize(count);
    if (fd_ >= 0) {
        std::vector<u8> buf(count * kEntrySize);
        off_t offset = static_cast<off_t>(kHeaderSize + first * kEntrySize);
        std::size_t got = 0;
        while (got < buf.size()) {
            ssize_t n = ::pread(fd_, buf.data() + got, buf.size() - got,
                                offset + static_cast<off_t>(got));
            if (n <= 0) throw IoError("pread failed: " + path_.string());
            got += static_cast<std::size_t>(n);
        }
        for (u64 i = 0; i < count; ++i) {
            std::memcpy(out[i].key.data(), buf.data() + i * kEntrySize, kKeySize);
            std::memcpy(out[i].value.data(), buf.data() + i * kEntrySize + kKeySize, kValueSize);
        }
    } else {
        std::copy(entries_.begin() + static_cast<std::ptrdiff_t>(first),
                  entries_.begin() + static_cast<std::ptrdiff_t>(first + count), out.begin());
    }
}

std::optional<Value> Run::search(const Key& key, SearchStats* stats) const {
    if (key < min_key_ || max_key_ < key) return std::nullopt;

    // Last fence whose first key is <= key selects the single block to read.
    auto it = std::upper_bound(fences_.begin(), fences_.end(), key,
                               [](const Key& k, const FencePointer& f) { return k < f.first_key; });
    if (it == fences_.begin()) return std::nullopt;
    u64 block = (it - 1)->block_index;

    if (stats) stats->block_reads += 1;
    if (fd_ >= 0) {
        thread_local std::vector<Entry> buf;
        load_block(block, buf);
        auto eit = std::lower_bound(buf.begin(), buf.end(), key,
                                    [](const Entry& e, const Key& k) { return e.key < k; });
        if (eit != buf.end() && eit->key == key) return eit->value;
        return std::nullopt;
    }
    u64 first = block * block_entries_;
    u64 count = std::min<u64>(block_entries_, entry_count_ - first);
    auto begin = entries_.begin() + static_cast<std::ptrdiff_t>(first);
    auto end = begin + static_cast<std::ptrdiff_t>(count);
    auto eit = std::lower_bound(begin, end, key,
                                [](const Entry& e, const Key& k) { return e.key < k; });
    if (eit != end && eit->key == key) return eit->value;
    return std::nullopt;
}

void Run::for_each(const std::function<void(const Entry&)>& fn) const {
    if (fd_ < 0) {
        for (const Entry& e : entries_) fn(e);
        return;
    }
    std::vector<Entry> block;
    for (u64 b = 0; b < block_count(); ++b) {
        load_block(b, block);
        for (const Entry& e : block) fn(e);
    }
}

void Run::remove_files() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (!path_.empty()) {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
        std::filesystem::path bf = path_;
        bf += ".bf";
        std::filesystem::remove(bf, ec);
        path_.clear();
    }
    entries_.clear();
}

}  // namespace llsm
