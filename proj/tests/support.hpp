#pragma once

// Helpers for tests that drive the command-line tool.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

inline std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

struct CliResult {
    int status = -1;
    std::string output; ///< stdout and stderr interleaved
};

/// Runs the tool with `args`, capturing output. Returns the exit status.
/// When `cwd` is given the tool runs there, so relative paths stay relative.
inline CliResult run_cli(const std::vector<std::string>& args, const fs::path& log,
                         const fs::path& cwd = {}) {
    std::string cmd = cwd.empty() ? std::string() : "cd " + quote(cwd.string()) + " && ";
    cmd += quote(CWL_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote(log.string()) + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(log);
    r.output.assign(std::istreambuf_iterator<char>(in), {});
    return r;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

/// Fresh scratch directory, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        path_ = fs::temp_directory_path() /
                ("cwl-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    fs::path path_;
};

/// Splits a CSV with a header row after `rows` data rows; both parts keep the header.
inline void split_rows(const fs::path& src, std::size_t rows, const fs::path& first,
                       const fs::path& second) {
    std::istringstream in(slurp(src));
    std::string header, line;
    std::getline(in, header);
    std::string a = header + "\n", b = header + "\n";
    std::size_t i = 0;
    while (std::getline(in, line)) {
        (i++ < rows ? a : b) += line + "\n";
    }
    spit(first, a);
    spit(second, b);
}

} // namespace testing_support
