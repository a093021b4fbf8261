#include "spstop/matrix_io.hpp"

#include <fstream>
#include <sstream>

#include "spstop/error.hpp"

namespace spstop {
namespace {

enum class Delimiter { Comma, Tab, Whitespace };

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line, Delimiter delim) {
    std::vector<std::string> fields;
    if (delim == Delimiter::Whitespace) {
        std::istringstream is(line);
        for (std::string f; is >> f;) {
            fields.push_back(f);
        }
        return fields;
    }
    const char sep = delim == Delimiter::Comma ? ',' : '\t';
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        fields.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

std::string where(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

PredictionMatrix parse_prediction_matrix(std::istream& in) {
    std::vector<std::string> header;
    Delimiter delim = Delimiter::Comma;
    std::vector<std::vector<Label>> columns;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') {
            continue;
        }
        if (header.empty()) {
            delim = stripped.find(',') != std::string::npos    ? Delimiter::Comma
                    : stripped.find('\t') != std::string::npos ? Delimiter::Tab
                                                               : Delimiter::Whitespace;
            header = split_line(stripped, delim);
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c].empty()) {
                    throw Error(ErrorCode::ParseError, where(line_no, c + 1) + ": empty column name");
                }
            }
            columns.resize(header.size());
            continue;
        }
        const auto fields = split_line(stripped, delim);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::RaggedMatrix, "line " + std::to_string(line_no) + " has " +
                                                     std::to_string(fields.size()) + " cells, header has " +
                                                     std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& cell = fields[c];
            if (cell == "+1" || cell == "1") {
                columns[c].push_back(Label::Positive);
            } else if (cell == "-1") {
                columns[c].push_back(Label::Negative);
            } else {
                throw Error(ErrorCode::InvalidLabel,
                            where(line_no, c + 1) + " ('" + header[c] + "'): '" + cell + "' is not +1/-1");
            }
        }
    }
    if (header.empty()) {
        throw Error(ErrorCode::ParseError, "missing header row");
    }
    if (columns.front().empty()) {
        throw Error(ErrorCode::ParseError, "matrix has no data rows");
    }

    PredictionMatrix m;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "truth") {
            if (m.truth) {
                throw Error(ErrorCode::ParseError, "more than one truth column");
            }
            m.truth = PredictionVector(std::move(columns[c]));
        } else {
            m.iteration_names.push_back(header[c]);
            m.iterations.emplace_back(std::move(columns[c]));
        }
    }
    return m;
}

PredictionMatrix parse_prediction_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return parse_prediction_matrix(in);
}

std::string format_prediction_matrix(const PredictionMatrix& m) {
    std::ostringstream os;
    std::vector<const PredictionVector*> cols;
    bool first = true;
    for (std::size_t c = 0; c < m.iterations.size(); ++c) {
        os << (first ? "" : ",") << m.iteration_names[c];
        cols.push_back(&m.iterations[c]);
        first = false;
    }
    if (m.truth) {
        os << (first ? "" : ",") << "truth";
        cols.push_back(&*m.truth);
    }
    os << '\n';
    const std::size_t rows = cols.empty() ? 0 : cols.front()->size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            os << (c ? "," : "") << ((*cols[c])[r] == Label::Positive ? "+1" : "-1");
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace spstop
