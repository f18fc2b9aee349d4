#pragma once

#include <string>
#include <vector>

#include "codl/ast.hpp"

namespace codl {

// One reported fault, rendered as "file:line:col: message".
struct Diag {
    SourceLoc loc;
    std::string message;

    std::string render() const {
        if (loc.file.empty() && loc.line == 0) return message;
        return loc.file + ":" + std::to_string(loc.line) + ":" +
               std::to_string(loc.col) + ": " + message;
    }
};

inline std::string render_diags(const std::vector<Diag>& ds) {
    std::string out;
    for (const auto& d : ds) {
        out += d.render();
        out += '\n';
    }
    return out;
}

}  // namespace codl
