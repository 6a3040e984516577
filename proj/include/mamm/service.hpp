#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mamm/motion.hpp"

namespace mamm {

struct ServiceConfig {
    std::string library_dir;
    double timeout_seconds = 120.0;
};

struct LibraryEntry {
    int id = 0;
    std::string name;  // file stem
    std::string path;
    BvhClip clip;
    MotionSequence motion;
};

/// Read-only set of BVH files. Ids are positions in the sorted file list;
/// files that fail to parse are skipped and reported in `skipped()`.
class MotionLibrary {
public:
    MotionLibrary() = default;
    static MotionLibrary load(const std::string& dir);

    const std::vector<LibraryEntry>& entries() const { return entries_; }
    const std::vector<std::string>& skipped() const { return skipped_; }
    const LibraryEntry* find(long long id) const;

private:
    std::vector<LibraryEntry> entries_;
    std::vector<std::string> skipped_;
};

struct HttpReply {
    int status = 200;
    std::string body;  // JSON
};

/// Endpoint logic without the socket layer.
HttpReply list_motions(const MotionLibrary& library);
HttpReply get_motion(const MotionLibrary& library, const std::string& id);
HttpReply post_align(const MotionLibrary& library, const std::string& body, double timeout_seconds);

class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    const MotionLibrary& library() const;

    /// Blocks until stop().
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mamm
