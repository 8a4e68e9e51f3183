#include "mdr/instance_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mdr {

namespace {

struct Token {
    std::string text;
    int line;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1;
    std::string cur;
    int cur_line = 0;
    bool in_comment = false;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back({cur, cur_line});
            cur.clear();
        }
    };
    for (char c : text) {
        if (c == '\n') {
            flush();
            ++line;
            in_comment = false;
            continue;
        }
        if (in_comment) continue;
        if (c == '#') {
            flush();
            in_comment = true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
            continue;
        }
        if (cur.empty()) cur_line = line;
        cur += c;
    }
    flush();
    return out;
}

class Reader {
  public:
    explicit Reader(std::vector<Token> toks) : toks_(std::move(toks)) {}

    bool done() const { return pos_ >= toks_.size(); }
    int last_line() const { return toks_.empty() ? 1 : toks_.back().line; }

    const Token& peek() const {
        if (done()) {
            std::ostringstream os;
            os << "line " << last_line() << ": unexpected end of input";
            throw ParseError(os.str());
        }
        return toks_[pos_];
    }

    Token take() {
        Token t = peek();
        ++pos_;
        return t;
    }

    void expect_keyword(const std::string& kw) {
        const Token t = take();
        if (t.text != kw) {
            std::ostringstream os;
            os << "line " << t.line << ": expected '" << kw << "', got '" << t.text << "'";
            throw ParseError(os.str());
        }
    }

    long take_integer(const char* what) {
        const Token t = take();
        try {
            std::size_t used = 0;
            const long v = std::stol(t.text, &used);
            if (used != t.text.size()) throw std::invalid_argument(t.text);
            return v;
        } catch (const std::exception&) {
            std::ostringstream os;
            os << "line " << t.line << ": expected " << what << ", got '" << t.text << "'";
            throw ParseError(os.str());
        }
    }

    double take_number(const char* what) {
        const Token t = take();
        try {
            std::size_t used = 0;
            const double v = std::stod(t.text, &used);
            if (used != t.text.size()) throw std::invalid_argument(t.text);
            return v;
        } catch (const std::exception&) {
            std::ostringstream os;
            os << "line " << t.line << ": expected " << what << ", got '" << t.text << "'";
            throw ParseError(os.str());
        }
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

SymMatrix read_matrix(Reader& r, int n, const std::string& name) {
    const int start_line = r.peek().line;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = r.take_number(("an entry of " + name).c_str());
    try {
        return SymMatrix(m);
    } catch (const InvalidMatrix& e) {
        std::ostringstream os;
        os << name << " starting at line " << start_line << ": " << e.what();
        throw ParseError(os.str());
    }
}

void append_matrix(std::ostringstream& os, const SymMatrix& m) {
    char buf[64];
    for (int i = 0; i < m.n(); ++i) {
        for (int j = 0; j < m.n(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            os << (j ? " " : "") << buf;
        }
        os << "\n";
    }
}

} // namespace

MDInstance parse_instance(const std::string& text) {
    Reader r(tokenize(text));

    r.expect_keyword("N");
    const long n = r.take_integer("the dimension");
    if (n < 1 || n > 64) {
        std::ostringstream os;
        os << "N = " << n << " is out of range [1, 64]";
        throw ParseError(os.str());
    }
    r.expect_keyword("L");
    const long l = r.take_integer("the description count");
    if (l < 1 || l > 32) {
        std::ostringstream os;
        os << "L = " << l << " is out of range [1, 32]";
        throw ParseError(os.str());
    }

    r.expect_keyword("Kx");
    const SymMatrix kx = read_matrix(r, int(n), "Kx");
    std::vector<SymMatrix> d;
    for (long i = 1; i <= l; ++i) {
        r.expect_keyword("D");
        const int at_line = r.peek().line;
        const long idx = r.take_integer("the description index");
        if (idx != i) {
            std::ostringstream os;
            os << "line " << at_line << ": expected D " << i << ", got D " << idx;
            throw ParseError(os.str());
        }
        std::ostringstream name;
        name << "D" << i;
        d.push_back(read_matrix(r, int(n), name.str()));
    }
    r.expect_keyword("D0");
    const SymMatrix d0 = read_matrix(r, int(n), "D0");

    if (!r.done()) {
        const Token t = r.take();
        std::ostringstream os;
        os << "line " << t.line << ": unexpected trailing content '" << t.text << "'";
        throw ParseError(os.str());
    }

    MDInstance inst{kx, d, d0};
    ensure_valid(inst);
    return inst;
}

MDInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_instance(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string format_instance(const MDInstance& inst) {
    std::ostringstream os;
    os << "N " << inst.n() << "\n";
    os << "L " << inst.l() << "\n";
    os << "Kx\n";
    append_matrix(os, inst.kx);
    for (int i = 0; i < inst.l(); ++i) {
        os << "D " << (i + 1) << "\n";
        append_matrix(os, inst.d[std::size_t(i)]);
    }
    os << "D0\n";
    append_matrix(os, inst.d0);
    return os.str();
}

} // namespace mdr
