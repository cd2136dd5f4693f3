#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rotnum/expr.hpp"

using namespace rotnum;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(ExprParse, BracketedThreeComponentField) {
    const auto f = parse_field("[1; x1; -x2]", 3);
    EXPECT_EQ(f.dim(), 3u);
    const auto v = eval_field(f, vec({0.5, 2.0, 3.0}));
    EXPECT_EQ(v[0], 1.0);
    EXPECT_EQ(v[1], 0.5);
    EXPECT_EQ(v[2], -2.0);
}

TEST(ExprParse, TrailingOperatorReportsPosition) {
    try {
        parse_field("[x1 +]", 1);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
        EXPECT_NE(std::string(e.what()).find("syntax error"), std::string::npos);
    }
}

TEST(ExprParse, FunctionsEvaluate) {
    const auto f = parse_field("[sin(x1)*x2; exp(-x1)]", 2);
    const auto v = eval_field(f, vec({0.0, 5.0}));
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[1], 1.0);
}

TEST(ExprParse, Errors) {
    EXPECT_THROW(parse_field("[x1; x2]", 3), ParseError);
    EXPECT_THROW(parse_field("[y1]", 1), ParseError);
    EXPECT_THROW(parse_field("[x4; 0; 0]", 3), ParseError);
    EXPECT_THROW(parse_field("[sin x1]", 1), ParseError);
    EXPECT_THROW(parse_field("[(x1]", 1), ParseError);
    EXPECT_THROW(parse_field("[x1] x1", 1), ParseError);
    EXPECT_THROW(parse_field("", 1), ParseError);
    EXPECT_THROW(parse_field("[x0]", 1), ParseError);
    EXPECT_THROW(parse_components("[x1; x2]", 2, 1), ParseError);
}

TEST(ExprParse, ScalarComponentsOverMoreVariables) {
    const auto f = parse_components("x1*x2 - x3", 3, 1);
    EXPECT_EQ(f.components(), 1u);
    EXPECT_EQ(f.dim(), 3u);
    const auto vj = eval_with_jacobian(f, vec({2.0, 5.0, 1.0}));
    EXPECT_EQ(vj.value[0], 9.0);
    EXPECT_EQ(vj.jacobian.rows(), 1);
    EXPECT_EQ(vj.jacobian(0, 0), 5.0);
    EXPECT_EQ(vj.jacobian(0, 2), -1.0);
}

TEST(ExprParse, GrammarDetails) {
    const auto p = vec({2.0, 3.0});
    EXPECT_EQ(eval_field(parse_field("2^3^2", 1), vec({0.0}))[0], 512.0);
    EXPECT_EQ(eval_field(parse_field("-x1^2", 1), vec({3.0}))[0], -9.0);
    EXPECT_EQ(eval_field(parse_components("x1 - x2 - 1", 2, 1), p)[0], -2.0);
    EXPECT_EQ(eval_field(parse_components("x1 / x2 * 3", 2, 1), p)[0], 2.0);
    EXPECT_EQ(eval_field(parse_field("  [ x1 ,x2 ]  ", 2), p)[1], 3.0);
    EXPECT_EQ(eval_field(parse_field("x1;x2", 2), p)[0], 2.0);
    EXPECT_DOUBLE_EQ(eval_field(parse_field("[pi; e]", 2), p)[0], std::numbers::pi);
    EXPECT_DOUBLE_EQ(eval_field(parse_field("1.5e-3*x1", 1), vec({2.0}))[0], 3e-3);
    EXPECT_DOUBLE_EQ(eval_field(parse_components("abs(x1) + sqrt(x2) + log(e) + atan(0) + tan(0)", 2, 1), vec({-4.0, 9.0}))[0],
                     8.0);
}

TEST(ExprEval, Examples) {
    const auto v = eval_field(parse_field("[1; x2; -x3]", 3), vec({0.0, 2.0, 3.0}));
    EXPECT_EQ(v, vec({1.0, 2.0, -3.0}));
    EXPECT_EQ(eval_field(parse_components("[x1^2 + x2^2]", 2, 1), vec({3.0, 4.0}))[0], 25.0);
    EXPECT_THROW(eval_field(parse_components("[x1/x2]", 2, 1), vec({1.0, 0.0})), DomainError);
}

TEST(ExprEval, DomainErrorsNameTheComponent) {
    try {
        eval_field(parse_field("[1; x1/x2]", 2), vec({1.0, 0.0}));
        FAIL() << "expected a domain error";
    } catch (const DomainError& e) {
        EXPECT_EQ(e.component(), 1u);
        EXPECT_NE(std::string(e.what()).find("component 2"), std::string::npos);
    }
    EXPECT_THROW(eval_field(parse_field("log(x1)", 1), vec({0.0})), DomainError);
    EXPECT_THROW(eval_field(parse_field("log(x1)", 1), vec({-1.0})), DomainError);
    EXPECT_THROW(eval_field(parse_field("sqrt(x1)", 1), vec({-1.0})), DomainError);
    EXPECT_THROW(eval_field(parse_field("x1^0.5", 1), vec({-1.0})), DomainError);
    EXPECT_THROW(eval_field(parse_field("x1^(-1)", 1), vec({0.0})), DomainError);
    EXPECT_THROW(jacobian(parse_field("sqrt(x1)", 1), vec({0.0})), DomainError);
    EXPECT_THROW(eval_field(parse_field("[x1; x2]", 2), vec({1.0})), PreconditionError);
}

TEST(ExprJacobian, ClosedForms) {
    const auto J = jacobian(parse_field("[x1+x2; x1-x2]", 2), vec({0.3, -7.0}));
    Eigen::Matrix2d expected;
    expected << 1, 1, 1, -1;
    EXPECT_EQ(J, Eigen::MatrixXd(expected));
    EXPECT_EQ(jacobian(parse_field("[sin(x1)]", 1), vec({0.0}))(0, 0), 1.0);

    const auto vj = eval_with_jacobian(parse_field("[x1*x2^3; exp(x1)*cos(x2)]", 2), vec({0.5, 2.0}));
    EXPECT_DOUBLE_EQ(vj.jacobian(0, 0), 8.0);
    EXPECT_DOUBLE_EQ(vj.jacobian(0, 1), 6.0);
    EXPECT_DOUBLE_EQ(vj.jacobian(1, 0), std::exp(0.5) * std::cos(2.0));
    EXPECT_DOUBLE_EQ(vj.jacobian(1, 1), -std::exp(0.5) * std::sin(2.0));
}

TEST(ExprJacobian, MatchesFiniteDifferencesOnRandomFields) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    for (int field = 0; field < 20; ++field) {
        const std::size_t dim = 1 + field % 4;
        const auto f = parse_field(oracle::random_field(rng, dim), dim);
        for (int point = 0; point < 20; ++point) {
            Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
            for (auto& x : p) x = coord(rng);
            const auto J = jacobian(f, p);
            const auto fd = oracle::fd_jacobian(f, p);
            for (Eigen::Index i = 0; i < J.rows(); ++i)
                for (Eigen::Index j = 0; j < J.cols(); ++j)
                    EXPECT_LE(std::abs(J(i, j) - fd(i, j)), 1e-6 * std::max(std::abs(fd(i, j)), 1e-3))
                        << "field " << render(f) << " entry " << i << "," << j;
        }
    }
}

TEST(ExprRender, RoundTripEvaluatesIdentically) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int field = 0; field < 10; ++field) {
        const auto f = parse_field(oracle::random_field(rng, 3), 3);
        const auto g = parse_field(render(f), 3);
        EXPECT_EQ(render(g), render(f));
        for (int k = 0; k < 100; ++k) {
            const Eigen::VectorXd p = Eigen::Vector3d(coord(rng), coord(rng), coord(rng));
            EXPECT_EQ(eval_field(f, p), eval_field(g, p));
        }
    }
}

TEST(ExprEval, PureAndRepeatable) {
    const auto f = parse_field("[sin(x1*x2) + x3^3; atan(x1)/(1 + x2^2); exp(-x3)]", 3);
    const Eigen::VectorXd p = Eigen::Vector3d(0.3, -1.1, 2.7);
    const auto v0 = eval_field(f, p);
    const auto j0 = jacobian(f, p);
    for (int k = 0; k < 10; ++k) {
        EXPECT_EQ(eval_field(f, p), v0);
        EXPECT_EQ(jacobian(f, p), j0);
    }
}

TEST(ExprScale, ScaledFieldIsMultiple) {
    const auto f = parse_field("[x1*x2; -x1]", 2);
    const auto g = scale_field(f, 2.5);
    const Eigen::VectorXd p = Eigen::Vector2d(0.7, -0.2);
    EXPECT_DOUBLE_EQ(eval_field(g, p)[0], 2.5 * eval_field(f, p)[0]);
    EXPECT_DOUBLE_EQ(eval_field(g, p)[1], 2.5 * eval_field(f, p)[1]);
}
