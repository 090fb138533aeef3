#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace recon_net;

namespace {

std::vector<TransactionRecord> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_transactions(in);
}

Error parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e;
    }
    ADD_FAILURE() << "expected an error";
    return Error(ErrorKind::io, "none");
}

const char* kHeader = "date,lender,borrower,amount,maturity\n";

// Three banks, two trading days.
const std::string kFixture = std::string(kHeader) +
                             "2005-01-03,A,B,5,ON\n"
                             "2005-01-03,B,A,2,ON\n"
                             "2005-01-04,A,B,1,ON\n"
                             "2005-01-04,C,A,4,ON\n"
                             "2005-01-04,B,C,3,ON\n";

}  // namespace

TEST(ParseTransactions, SingleRecord) {
    const auto r = parse(std::string(kHeader) + "2007-03-01,B1,B2,10.5,ON\n");
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].date, (Date{2007, 3, 1}));
    EXPECT_EQ(r[0].lender, "B1");
    EXPECT_EQ(r[0].borrower, "B2");
    EXPECT_EQ(r[0].amount, 10.5);
    EXPECT_EQ(r[0].maturity, "ON");
}

TEST(ParseTransactions, MaturityIsOptional) {
    const auto r = parse("date,lender,borrower,amount\r\n2007-03-01,B1,B2,3\r\n\n2007-03-02,B2,B1,4\n");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_TRUE(r[0].maturity.empty());
    EXPECT_EQ(r[1].amount, 4.0);
}

TEST(ParseTransactions, NegativeAmountIsValidationError) {
    const Error e = parse_error(std::string(kHeader) + "2007-03-01,B1,B2,-3,ON\n");
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-03-01,B1,B2,0\n").kind(), ErrorKind::validation);
}

TEST(ParseTransactions, MissingBorrowerIsParseErrorWithLine) {
    const Error e = parse_error(std::string(kHeader) + "2007-03-01,B1,B2,1\n2007-03-01,B1,10.5\n");
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
}

TEST(ParseTransactions, SelfLoopIsValidationError) {
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-03-01,B1,B1,1\n").kind(), ErrorKind::validation);
}

TEST(ParseTransactions, MalformedFields) {
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-02-30,B1,B2,1\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error(std::string(kHeader) + "03/01/2007,B1,B2,1\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-03-01,B1,B2,ten\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-03-01,B1,B2,1e999\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error(std::string(kHeader) + "2007-03-01,B1,B2,1,ON,x\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error("lender,borrower,amount\n").kind(), ErrorKind::parse);
    EXPECT_EQ(parse_error("").kind(), ErrorKind::parse);
}

TEST(Date, ParsingAndCalendarArithmetic) {
    EXPECT_TRUE(Date::parse("2000-02-29"));
    EXPECT_FALSE(Date::parse("1900-02-29"));
    EXPECT_FALSE(Date::parse("2001-13-01"));
    EXPECT_EQ((Date{1999, 12, 31}).next(), (Date{2000, 1, 1}));
    EXPECT_EQ((Date{2024, 1, 1}).weekday(), 0);  // a Monday
    EXPECT_EQ((Date{1999, 1, 1}).weekday(), 4);  // a Friday
    const auto days = weekday_calendar(2024, 250);
    EXPECT_EQ(days.size(), 250u);
    for (const Date& d : days) EXPECT_LT(d.weekday(), 5);
}

TEST(Windows, TrailingPartialWindowDropped) {
    std::vector<Date> cal;
    Date d{2010, 1, 1};
    for (int k = 0; k < 10; ++k, d = d.next()) cal.push_back(d);
    const auto w = make_windows(cal, 2010, 3);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w[2].days.front(), cal[6]);
    EXPECT_EQ(w[2].days.size(), 3u);
    EXPECT_EQ(make_windows(cal, 2010, 11).size(), 0u);
    EXPECT_EQ(make_windows(cal, 2010, 10).size(), 1u);
}

TEST(Aggregate, RepeatedTransactionsCollapse) {
    const auto r = parse(std::string(kHeader) + "2007-03-01,B1,B2,5\n2007-03-01,B1,B2,7\n");
    const auto cal = trading_calendar(r, 2007);
    const auto net = aggregate(r, make_windows(cal, 2007, 1)[0]);
    ASSERT_EQ(net.size(), 2u);
    EXPECT_TRUE(net.has_link(0, 1));
    EXPECT_EQ(net.weight(0, 1), 12.0);
}

TEST(Aggregate, OutsideWindowExcludedButNodeSetKept) {
    const auto r = parse(kFixture);
    const auto w = make_windows(trading_calendar(r, 2005), 2005, 1);
    ASSERT_EQ(w.size(), 2u);
    const auto first = aggregate(r, w[0]);
    EXPECT_EQ(first.size(), 3u);  // C is active later in the year
    EXPECT_EQ(first.link_count(), 2u);
    EXPECT_EQ(first.weight(0, 1), 5.0);
    EXPECT_FALSE(first.has_link(2, 0));
}

TEST(Aggregate, YearlyWindowIsUnionOfTransactions) {
    const auto r = parse(kFixture);
    const auto year = make_windows(trading_calendar(r, 2005), 2005, 2);
    ASSERT_EQ(year.size(), 1u);
    const auto net = aggregate(r, year[0]);
    EXPECT_EQ(net.labels(), (std::vector<std::string>{"A", "B", "C"}));
    DirectedNetwork expected(std::vector<std::string>{"A", "B", "C"}, true);
    expected.add_weight(0, 1, 6.0);
    expected.add_weight(1, 0, 2.0);
    expected.add_weight(2, 0, 4.0);
    expected.add_weight(1, 2, 3.0);
    EXPECT_EQ(net, expected);
}

TEST(Aggregate, EmptyWindowGivesEmptyNetwork) {
    const auto r = parse(kFixture);
    AggregationWindow w;
    w.year = 2005;
    w.days = {Date{2005, 1, 5}};
    EXPECT_EQ(aggregate(r, w).link_count(), 0u);
}

TEST(FitnessFromStrengths, Examples) {
    DirectedNetwork one(3, true);
    one.add_weight(0, 2, 5.0);
    const auto f = fitness_from_strengths(one);
    EXPECT_EQ(f.assets, (std::vector<double>{5, 0, 0}));
    EXPECT_EQ(f.liabilities, (std::vector<double>{0, 0, 5}));

    DirectedNetwork two(2, true);
    two.add_weight(0, 1, 2.0);
    two.add_weight(1, 0, 3.0);
    const auto g = fitness_from_strengths(two);
    EXPECT_EQ(g.assets, (std::vector<double>{2, 3}));
    EXPECT_EQ(g.liabilities, (std::vector<double>{3, 2}));

    // Fixture sums by hand: A lends 5+1, B lends 2+3, C lends 4; A borrows 2+4, B 5+1, C 3.
    const auto r = parse(kFixture);
    const auto h = fitness_from_strengths(aggregate(r, make_windows(trading_calendar(r, 2005), 2005, 2)[0]));
    EXPECT_EQ(h.assets, (std::vector<double>{6, 5, 4}));
    EXPECT_EQ(h.liabilities, (std::vector<double>{6, 6, 3}));
    EXPECT_EQ(h.labels, (std::vector<std::string>{"A", "B", "C"}));
}

TEST(FitnessFromStrengths, UnweightedIsError) {
    DirectedNetwork net(3);
    net.set_link(0, 1);
    EXPECT_THROW(fitness_from_strengths(net), Error);
}

TEST(SynthFitness, ConstantAndDeterminism) {
    const auto c = synth_fitness(10, DistributionSpec::parse("constant:1"), 3);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(c.assets[i] + c.liabilities[i], 2.0);
    const auto a = synth_fitness(50, DistributionSpec::parse("pareto:2.5,1"), 99);
    const auto b = synth_fitness(50, DistributionSpec::parse("pareto:2.5,1"), 99);
    EXPECT_EQ(a.assets, b.assets);
    EXPECT_EQ(a.liabilities, b.liabilities);
    for (double x : a.assets) EXPECT_GE(x, 1.0);
    EXPECT_NE(synth_fitness(50, DistributionSpec::parse("pareto:2.5,1"), 100).assets, a.assets);
}

TEST(SynthFitness, LognormalLogMeanWithinFourStandardErrors) {
    const std::size_t n = 10000;
    const auto f = synth_fitness(n, DistributionSpec::parse("lognormal:0,1"), 2024);
    double s = 0.0, s2 = 0.0;
    for (double a : f.assets) s += std::log(a), s2 += std::log(a) * std::log(a);
    const double m = s / n;
    const double sd = std::sqrt((s2 - n * m * m) / (n - 1));
    EXPECT_LT(std::abs(m), 4.0 * sd / std::sqrt(double(n)));
}

TEST(SynthFitness, InvalidParametersAreConfigurationErrors) {
    for (const char* spec : {"lognormal:0,-1", "pareto:0,1", "pareto:2,0", "constant:0", "gamma:1,1", "constant"}) {
        try {
            DistributionSpec::parse(spec);
            ADD_FAILURE() << spec;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::configuration) << spec;
        }
    }
    EXPECT_THROW(synth_fitness(1, DistributionSpec::parse("constant:1"), 0), Error);
}

TEST(FitnessCsv, RoundTripsAtFullPrecision) {
    const auto f = synth_fitness(20, DistributionSpec::parse("lognormal:0,2"), 5);
    std::stringstream s;
    write_fitness_csv(s, f);
    const auto g = read_fitness_csv(s);
    EXPECT_EQ(g.assets, f.assets);
    EXPECT_EQ(g.liabilities, f.liabilities);
    EXPECT_EQ(g.labels, f.labels);
    std::istringstream bad("node,assets\nB1,2\n");
    EXPECT_THROW(read_fitness_csv(bad), Error);
}

TEST(IngestProperties, WindowUnionEqualsYearlyRestriction) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = support::lognormal_fitness(8, 1.0, rng.next());
        StreamSpec spec;
        spec.trading_days = 40;
        spec.rate = 0.02;
        spec.amount_sigma = 0.5;
        const auto records = synth_transactions(f, spec, rng.next());
        const auto cal = trading_calendar(records, spec.year);
        const auto labels = active_nodes(records, spec.year);
        const std::size_t delta = 1 + rng.next() % 9;
        const auto windows = make_windows(cal, spec.year, delta);
        AggregationWindow covered;
        covered.year = spec.year;
        for (const auto& w : windows) covered.days.insert(covered.days.end(), w.days.begin(), w.days.end());
        const auto restricted = aggregate(records, covered, labels);
        DirectedNetwork union_net(labels.size());
        for (const auto& w : windows) {
            const auto net = aggregate(records, w, labels);
            for (std::size_t i = 0; i < net.size(); ++i)
                for (std::size_t j = 0; j < net.size(); ++j)
                    if (net.has_link(i, j)) union_net.set_link(i, j);
        }
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = 0; j < labels.size(); ++j)
                EXPECT_EQ(union_net.has_link(i, j), restricted.has_link(i, j));
    }
}

TEST(IngestProperties, SplitBatchesMergeToSinglePass) {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = support::lognormal_fitness(6, 1.0, rng.next());
        StreamSpec spec;
        spec.trading_days = 20;
        spec.rate = 0.05;
        spec.amount_sigma = 1.0;
        auto records = synth_transactions(f, spec, rng.next());
        // Integer amounts keep every partial sum exact, so batch order cannot matter.
        for (auto& r : records) r.amount = std::floor(r.amount * 1000.0) + 1.0;
        const auto labels = active_nodes(records, spec.year);
        AggregationWindow window;
        window.year = spec.year;
        window.days = trading_calendar(records, spec.year);
        const std::size_t cut = records.size() / 2;
        const std::vector<TransactionRecord> a(records.begin(), records.begin() + cut), b(records.begin() + cut, records.end());
        const auto whole = aggregate(records, window, labels);
        DirectedNetwork merged = aggregate(a, window, labels);
        const auto second = aggregate(b, window, labels);
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = 0; j < labels.size(); ++j)
                if (second.has_link(i, j)) merged.add_weight(i, j, second.weight(i, j));
        EXPECT_EQ(merged, whole);
    }
}

TEST(IngestProperties, YearlyStrengthsSumToVolume) {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = support::lognormal_fitness(10, 1.0, rng.next());
        StreamSpec spec;
        spec.trading_days = 30;
        spec.rate = 0.03;
        spec.amount_sigma = 0.8;
        const auto records = synth_transactions(f, spec, rng.next());
        const auto cal = trading_calendar(records, spec.year);
        const auto fit = fitness_from_strengths(aggregate(records, make_windows(cal, spec.year, cal.size())[0]));
        double total = 0.0, sa = 0.0, sl = 0.0;
        for (const auto& r : records) total += r.amount;
        for (std::size_t i = 0; i < fit.size(); ++i) sa += fit.assets[i], sl += fit.liabilities[i];
        EXPECT_NEAR(sa, total, 1e-9 * total);
        EXPECT_NEAR(sl, total, 1e-9 * total);
    }
}

TEST(SynthTransactions, DeterministicAndWellFormed) {
    const auto f = support::lognormal_fitness(12, 1.0, 4);
    for (auto kind : {StreamSpec::Kind::stream_fdcm, StreamSpec::Kind::stream_fgrm}) {
        StreamSpec spec;
        spec.kind = kind;
        spec.trading_days = 25;
        spec.rate = 0.05;
        spec.v = 3.0;
        const auto a = synth_transactions(f, spec, 77);
        const auto b = synth_transactions(f, spec, 77);
        ASSERT_EQ(a.size(), b.size());
        ASSERT_FALSE(a.empty());
        std::stringstream sa, sb;
        write_transactions(sa, a);
        write_transactions(sb, b);
        EXPECT_EQ(sa.str(), sb.str());
        const auto back = parse_transactions(sa);
        ASSERT_EQ(back.size(), a.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(back[k].amount, a[k].amount);
            EXPECT_NE(back[k].lender, back[k].borrower);
        }
    }
}
