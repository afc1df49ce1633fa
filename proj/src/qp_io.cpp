#include "deepc/errors.hpp"
#include "deepc/qp.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace deepc {

namespace {

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
    Index nnz = 0;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) ++nnz;
    out << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << m(i, j) << '\n';
}

void write_vector(std::ostream& out, const char* name, const Vector& v) {
    out << name << ' ' << v.size() << '\n';
    for (Index i = 0; i < v.size(); ++i) out << v(i) << '\n';
}

double parse_value(const std::string& tok) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(tok);
}

void expect_name(std::istream& in, const char* name) {
    std::string tok;
    if (!(in >> tok) || tok != name)
        throw InvalidArgument(std::string("QP dump: expected section '") + name + "', got '" +
                              tok + "'");
}

Matrix read_matrix(std::istream& in, const char* name) {
    expect_name(in, name);
    Index r = 0, c = 0, nnz = 0;
    in >> r >> c >> nnz;
    Matrix m = Matrix::Zero(r, c);
    for (Index k = 0; k < nnz; ++k) {
        Index i = 0, j = 0;
        std::string v;
        in >> i >> j >> v;
        m(i - 1, j - 1) = parse_value(v);
    }
    return m;
}

Vector read_vector(std::istream& in, const char* name) {
    expect_name(in, name);
    Index n = 0;
    in >> n;
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        std::string tok;
        in >> tok;
        v(i) = parse_value(tok);
    }
    return v;
}

}  // namespace

void dump_qp(const QuadraticProgram& qp, std::ostream& out) {
    const auto old_prec = out.precision(17);
    out << "%%QuadraticProgram d=" << qp.num_variables() << " e=" << qp.Aeq.rows()
        << " c=" << qp.G.rows() << '\n';
    write_matrix(out, "P", qp.P);
    write_vector(out, "q", qp.q);
    write_matrix(out, "Aeq", qp.Aeq);
    write_vector(out, "beq", qp.beq);
    write_matrix(out, "G", qp.G);
    write_vector(out, "lower", qp.lower);
    write_vector(out, "upper", qp.upper);
    out << "constant " << qp.constant << '\n';
    out.precision(old_prec);
}

QuadraticProgram read_qp(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%QuadraticProgram", 0) != 0)
        throw InvalidArgument("QP dump: missing %%QuadraticProgram header");
    QuadraticProgram qp;
    qp.P = read_matrix(in, "P");
    qp.q = read_vector(in, "q");
    qp.Aeq = read_matrix(in, "Aeq");
    qp.beq = read_vector(in, "beq");
    qp.G = read_matrix(in, "G");
    qp.lower = read_vector(in, "lower");
    qp.upper = read_vector(in, "upper");
    expect_name(in, "constant");
    std::string c;
    in >> c;
    qp.constant = parse_value(c);
    if (!in) throw InvalidArgument("QP dump: truncated");
    return qp;
}

}  // namespace deepc
