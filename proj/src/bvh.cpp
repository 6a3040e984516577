#include <charconv>
#include <fstream>
#include <sstream>

#include "mamm/error.hpp"
#include "mamm/motion.hpp"

namespace mamm {

namespace {

struct Token {
    std::string_view text;
    int line;
};

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

void tokenize_line(std::string_view line, int line_no, std::vector<Token>& out) {
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back({line.substr(i, j - i), line_no});
        i = j;
    }
}

double parse_number(std::string_view s, int line) {
    double value = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw BvhError(line, "expected a number, found '" + std::string(s) + "'");
    }
    return value;
}

std::optional<Channel> channel_from_name(std::string_view name) {
    if (name == "Xposition") return Channel::x_position;
    if (name == "Yposition") return Channel::y_position;
    if (name == "Zposition") return Channel::z_position;
    if (name == "Xrotation") return Channel::x_rotation;
    if (name == "Yrotation") return Channel::y_rotation;
    if (name == "Zrotation") return Channel::z_rotation;
    return std::nullopt;
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::x_position: return "Xposition";
        case Channel::y_position: return "Yposition";
        case Channel::z_position: return "Zposition";
        case Channel::x_rotation: return "Xrotation";
        case Channel::y_rotation: return "Yrotation";
        case Channel::z_rotation: return "Zrotation";
    }
    return "";
}

class HierarchyParser {
public:
    explicit HierarchyParser(std::vector<Token> tokens, int end_line)
        : tokens_(std::move(tokens)), end_line_(end_line) {}

    std::vector<Joint> parse() {
        expect("HIERARCHY");
        expect("ROOT");
        parse_joint(std::nullopt);
        if (pos_ != tokens_.size()) fail(tokens_[pos_].line, "unexpected token '" + std::string(tokens_[pos_].text) + "'");
        return std::move(joints_);
    }

private:
    [[noreturn]] void fail(int line, const std::string& what) { throw BvhError(line, what); }

    const Token& next(const char* what) {
        if (pos_ >= tokens_.size()) fail(end_line_, std::string("unexpected end of hierarchy, expected ") + what);
        return tokens_[pos_++];
    }

    void expect(std::string_view keyword) {
        const Token& t = next(std::string(keyword).c_str());
        if (t.text != keyword) fail(t.line, "expected '" + std::string(keyword) + "', found '" + std::string(t.text) + "'");
    }

    Vec3 parse_offset() {
        expect("OFFSET");
        Vec3 v;
        for (int i = 0; i < 3; ++i) {
            const Token& t = next("offset value");
            v[i] = parse_number(t.text, t.line);
        }
        return v;
    }

    void parse_joint(std::optional<int> parent) {
        const Token& name = next("joint name");
        const int index = static_cast<int>(joints_.size());
        joints_.push_back(Joint{std::string(name.text), parent, Vec3::Zero(), {}, std::nullopt});
        expect("{");
        joints_[index].offset = parse_offset();

        const Token& kw = next("CHANNELS");
        if (kw.text != "CHANNELS") fail(kw.line, "expected 'CHANNELS', found '" + std::string(kw.text) + "'");
        const Token& count_tok = next("channel count");
        const double count = parse_number(count_tok.text, count_tok.line);
        if (count != 3 && count != 6) {
            fail(count_tok.line, "joint '" + joints_[index].name + "' declares " + std::string(count_tok.text) +
                                     " channels; only 3 or 6 are supported");
        }
        for (int c = 0; c < static_cast<int>(count); ++c) {
            const Token& ch = next("channel name");
            auto channel = channel_from_name(ch.text);
            if (!channel) fail(ch.line, "unknown channel '" + std::string(ch.text) + "' (channel count mismatch?)");
            joints_[index].channels.push_back(*channel);
        }

        while (true) {
            const Token& t = next("'}'");
            if (t.text == "}") return;
            if (t.text == "JOINT") {
                parse_joint(index);
            } else if (t.text == "End") {
                expect("Site");
                expect("{");
                if (joints_[index].end_site) fail(t.line, "joint '" + joints_[index].name + "' has more than one End Site");
                joints_[index].end_site = parse_offset();
                expect("}");
            } else {
                fail(t.line, "unexpected token '" + std::string(t.text) + "' in joint '" + joints_[index].name + "'");
            }
        }
    }

    std::vector<Token> tokens_;
    size_t pos_ = 0;
    int end_line_;
    std::vector<Joint> joints_;
};

void append_number(std::string& out, double v) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

void write_joint(std::string& out, const Skeleton& skel, int j, int depth) {
    const std::string indent(static_cast<size_t>(depth), '\t');
    const Joint& joint = skel.joint(j);
    out += indent + (joint.parent ? "JOINT " : "ROOT ") + joint.name + "\n";
    out += indent + "{\n";
    out += indent + "\tOFFSET";
    for (int i = 0; i < 3; ++i) {
        out += ' ';
        append_number(out, joint.offset[i]);
    }
    out += "\n" + indent + "\tCHANNELS " + std::to_string(joint.channels.size());
    for (Channel c : joint.channels) {
        out += ' ';
        out += channel_name(c);
    }
    out += '\n';
    for (int c = j + 1; c < skel.joint_count(); ++c) {
        if (skel.joint(c).parent == j) write_joint(out, skel, c, depth + 1);
    }
    if (joint.end_site) {
        out += indent + "\tEnd Site\n" + indent + "\t{\n" + indent + "\t\tOFFSET";
        for (int i = 0; i < 3; ++i) {
            out += ' ';
            append_number(out, (*joint.end_site)[i]);
        }
        out += "\n" + indent + "\t}\n";
    }
    out += indent + "}\n";
}

}  // namespace

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
    if (joints_.empty()) throw InputError("skeleton has no joints");
    for (int j = 0; j < joint_count(); ++j) {
        const Joint& joint = joints_[j];
        if (j == 0 && joint.parent) throw InputError("joint 0 must be the root");
        if (j > 0 && (!joint.parent || *joint.parent < 0 || *joint.parent >= j)) {
            throw InputError("joint '" + joint.name + "' must have a parent that precedes it");
        }
        for (int k = 0; k < j; ++k) {
            if (joints_[k].name == joint.name) throw InputError("duplicate joint name '" + joint.name + "'");
        }
        if (joint.channels.size() != 3 && joint.channels.size() != 6) {
            throw InputError("joint '" + joint.name + "' must have 3 or 6 channels");
        }
        std::string order;
        int positions = 0;
        for (Channel c : joint.channels) {
            switch (c) {
                case Channel::x_rotation: order += 'X'; break;
                case Channel::y_rotation: order += 'Y'; break;
                case Channel::z_rotation: order += 'Z'; break;
                default: ++positions; break;
            }
        }
        if (order.size() != 3 || (positions != 0 && positions != 3)) {
            throw InputError("joint '" + joint.name + "' needs exactly three rotation channels");
        }
        orders_.push_back(EulerOrder::parse(order));
        offsets_.push_back(total_channels_);
        total_channels_ += static_cast<int>(joint.channels.size());
    }
}

BvhClip parse_bvh(std::string_view text) {
    const auto lines = split_lines(text);

    size_t motion_line = lines.size();
    std::vector<Token> hierarchy;
    for (size_t i = 0; i < lines.size(); ++i) {
        std::vector<Token> toks;
        tokenize_line(lines[i], static_cast<int>(i + 1), toks);
        if (!toks.empty() && toks.front().text == "MOTION") {
            motion_line = i;
            break;
        }
        hierarchy.insert(hierarchy.end(), toks.begin(), toks.end());
    }
    if (motion_line == lines.size()) throw BvhError(static_cast<int>(lines.size()), "missing MOTION section");

    Skeleton skeleton(HierarchyParser(std::move(hierarchy), static_cast<int>(motion_line + 1)).parse());

    // "Frames: N" then an optional "Frame Time: dt".
    size_t i = motion_line + 1;
    auto next_content_line = [&]() {
        while (i < lines.size()) {
            std::vector<Token> toks;
            tokenize_line(lines[i], static_cast<int>(i + 1), toks);
            if (!toks.empty()) return toks;
            ++i;
        }
        return std::vector<Token>{};
    };

    auto toks = next_content_line();
    if (toks.empty() || toks[0].text.substr(0, 6) != "Frames") {
        throw BvhError(static_cast<int>(std::min(i + 1, lines.size())), "expected 'Frames:'");
    }
    std::string_view count_text;
    if (toks[0].text == "Frames:" && toks.size() == 2) count_text = toks[1].text;
    else if (toks[0].text == "Frames" && toks.size() == 3 && toks[1].text == ":") count_text = toks[2].text;
    else throw BvhError(toks[0].line, "malformed 'Frames:' line");
    const double declared = parse_number(count_text, toks[0].line);
    if (declared < 0 || declared != static_cast<int>(declared)) throw BvhError(toks[0].line, "invalid frame count");
    const int frames = static_cast<int>(declared);
    ++i;

    BvhClip clip;
    clip.skeleton = std::move(skeleton);
    toks = next_content_line();
    if (!toks.empty() && toks[0].text == "Frame") {
        if (toks.size() != 3 || toks[1].text != "Time:") throw BvhError(toks[0].line, "malformed 'Frame Time:' line");
        clip.frame_time = parse_number(toks[2].text, toks[0].line);
        if (!(clip.frame_time > 0.0)) throw BvhError(toks[0].line, "frame time must be positive");
        ++i;
    }

    const int width = clip.skeleton.channel_count();
    clip.channels.resize(frames, width);
    int row = 0;
    for (; i < lines.size(); ++i) {
        std::vector<Token> values;
        tokenize_line(lines[i], static_cast<int>(i + 1), values);
        if (values.empty()) continue;
        const int line_no = static_cast<int>(i + 1);
        if (row >= frames) {
            throw BvhError(line_no, "more frame lines than the declared Frames: " + std::to_string(frames));
        }
        if (static_cast<int>(values.size()) != width) {
            throw BvhError(line_no, "expected " + std::to_string(width) + " channel values, found " +
                                        std::to_string(values.size()));
        }
        for (int c = 0; c < width; ++c) clip.channels(row, c) = parse_number(values[c].text, line_no);
        ++row;
    }
    if (row != frames) {
        throw BvhError(static_cast<int>(lines.size()), "declared Frames: " + std::to_string(frames) + " but found " +
                                                           std::to_string(row) + " frame lines");
    }
    return clip;
}

BvhClip read_bvh_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_bvh(ss.str());
    } catch (const BvhError& e) {
        throw BvhError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
    }
}

std::string write_bvh(const BvhClip& clip) {
    std::string out = "HIERARCHY\n";
    write_joint(out, clip.skeleton, 0, 0);
    out += "MOTION\nFrames: " + std::to_string(clip.frame_count()) + "\nFrame Time: ";
    append_number(out, clip.frame_time);
    out += '\n';
    for (int t = 0; t < clip.frame_count(); ++t) {
        for (int c = 0; c < clip.channels.cols(); ++c) {
            if (c) out += ' ';
            append_number(out, clip.channels(t, c));
        }
        out += '\n';
    }
    return out;
}

}  // namespace mamm
