#include "support.hpp"

#include "vulnscape/csv.hpp"

namespace testing {

std::vector<std::string> diff_dirs(const fs::path& a, const fs::path& b, const std::set<std::string>& ignore) {
    auto names = [&](const fs::path& dir) {
        std::set<std::string> out;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) {
                std::string rel = fs::relative(entry.path(), dir).generic_string();
                if (!ignore.count(rel)) out.insert(rel);
            }
        return out;
    };
    std::set<std::string> na = names(a), nb = names(b);
    std::set<std::string> all = na;
    all.insert(nb.begin(), nb.end());
    std::vector<std::string> bad;
    for (const auto& name : all) {
        if (!na.count(name) || !nb.count(name) ||
            vulnscape::csv::read_text(a / name) != vulnscape::csv::read_text(b / name))
            bad.push_back(name);
    }
    return bad;
}

}  // namespace testing
