#include "test_util.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <fstream>

using namespace mcmarg;
using mcmarg::testing::TempDir;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r)
{
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) {
      m(i, j++) = v;
    }
    ++i;
  }
  return m;
}

void write_text(const std::filesystem::path& p, const std::string& s)
{
  std::ofstream(p, std::ios::binary) << s;
}

std::string read_bytes(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

} // namespace

TEST(Dataset, RejectsEmptyAndNonFinite)
{
  EXPECT_THROW(Dataset(Matrix(0, 3)), std::invalid_argument);
  EXPECT_THROW(Dataset(Matrix(3, 0)), std::invalid_argument);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Dataset{ bad }, std::invalid_argument);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Dataset{ bad }, std::invalid_argument);
}

TEST(VectorIo, BinaryTwoByTwo)
{
  TempDir dir("io");
  const Dataset x(rows({ { 1.0, 2.0 }, { 3.0, 4.0 } }));
  save_vectors(x, dir / "v.bin", VectorFormat::binary);
  const Dataset y = load_vectors(dir / "v.bin", VectorFormat::binary);
  EXPECT_EQ(y.size(), 2u);
  EXPECT_EQ(y.dim(), 2u);
  EXPECT_EQ(x, y);
}

TEST(VectorIo, BinaryLayoutIsDocumented)
{
  TempDir dir("io");
  save_vectors(Dataset(rows({ { 1.0, -2.5 } })), dir / "v.bin", VectorFormat::binary);
  const std::string b = read_bytes(dir / "v.bin");
  ASSERT_EQ(b.size(), 4u + 1 + 4 + 8 + 2 * 4);
  EXPECT_EQ(b.substr(0, 4), "MCMV");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(b[5]), 2u); // d, little-endian u32
  EXPECT_EQ(b[6] | b[7] | b[8], 0);
  EXPECT_EQ(static_cast<unsigned char>(b[9]), 1u); // n, little-endian u64
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[17 + i])) << (8 * i);
  }
  EXPECT_EQ(std::bit_cast<float>(bits), 1.0f);
}

TEST(VectorIo, BinaryRoundTripIsBitExactForFloat32Values)
{
  TempDir dir("io");
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::uint32_t> bits;
  std::uniform_int_distribution<int> dims(1, 40);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix m(dims(rng), dims(rng));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      float f;
      do {
        f = std::bit_cast<float>(bits(rng));
      } while (!std::isfinite(f));
      m.data()[i] = static_cast<double>(f);
    }
    const Dataset x(m);
    save_vectors(x, dir / "r.bin", VectorFormat::binary);
    const Dataset y = load_vectors(dir / "r.bin", VectorFormat::binary);
    ASSERT_EQ(y.size(), x.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      ASSERT_EQ(std::bit_cast<std::uint64_t>(x.values().data()[i]),
                std::bit_cast<std::uint64_t>(y.values().data()[i]));
    }
  }
}

TEST(VectorIo, BinaryErrors)
{
  TempDir dir("io");
  EXPECT_THROW(load_vectors(dir / "missing.bin", VectorFormat::binary), IoError);

  save_vectors(Dataset(rows({ { 1, 2 }, { 3, 4 } })), dir / "v.bin", VectorFormat::binary);
  std::string b = read_bytes(dir / "v.bin");

  write_text(dir / "short.bin", b.substr(0, b.size() - 4));
  try {
    load_vectors(dir / "short.bin", VectorFormat::binary);
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("payload length mismatch"), std::string::npos);
  }

  std::string magic = b;
  magic[0] = 'X';
  write_text(dir / "magic.bin", magic);
  EXPECT_THROW(load_vectors(dir / "magic.bin", VectorFormat::binary), IoError);
  write_text(dir / "trunc.bin", b.substr(0, 10));
  EXPECT_THROW(load_vectors(dir / "trunc.bin", VectorFormat::binary), IoError);

  std::string nan = b;
  const auto qnan = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int i = 0; i < 4; ++i) {
    nan[17 + i] = static_cast<char>((qnan >> (8 * i)) & 0xff);
  }
  write_text(dir / "nan.bin", nan);
  EXPECT_THROW(load_vectors(dir / "nan.bin", VectorFormat::binary), IoError);
}

TEST(VectorIo, SaveToUnwritablePathFails)
{
  TempDir dir("io");
  EXPECT_THROW(save_vectors(Dataset(rows({ { 1 } })), dir / "no" / "such" / "dir" / "v.bin"), IoError);
}

TEST(VectorIo, CsvParse)
{
  TempDir dir("io");
  write_text(dir / "v.csv", "0.5,0.5\n-0.5,-0.5");
  const Dataset x = load_vectors(dir / "v.csv", VectorFormat::csv);
  EXPECT_EQ(x, Dataset(rows({ { 0.5, 0.5 }, { -0.5, -0.5 } })));
}

TEST(VectorIo, CsvSingleValueRoundTrip)
{
  TempDir dir("io");
  const Dataset x(rows({ { 7.0 } }));
  save_vectors(x, dir / "v.csv", VectorFormat::csv);
  EXPECT_EQ(read_bytes(dir / "v.csv"), "7\n");
  EXPECT_EQ(load_vectors(dir / "v.csv"), x);
}

TEST(VectorIo, CsvRoundTripIsExactForDoubles)
{
  TempDir dir("io");
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1e3);
  Matrix m(17, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = normal(rng);
  }
  save_vectors(Dataset(m), dir / "v.csv");
  EXPECT_EQ(load_vectors(dir / "v.csv").values(), m);
}

TEST(VectorIo, CsvErrors)
{
  TempDir dir("io");
  write_text(dir / "ragged.csv", "1,2\n3\n");
  EXPECT_THROW(load_vectors(dir / "ragged.csv"), IoError);
  write_text(dir / "word.csv", "1,abc\n");
  EXPECT_THROW(load_vectors(dir / "word.csv"), IoError);
  write_text(dir / "empty.csv", "");
  EXPECT_THROW(load_vectors(dir / "empty.csv"), IoError);
  write_text(dir / "inf.csv", "1,inf\n");
  EXPECT_ANY_THROW(load_vectors(dir / "inf.csv"));
}

TEST(VectorIo, FormatNames)
{
  EXPECT_EQ(parse_vector_format("binary"), VectorFormat::binary);
  EXPECT_EQ(parse_vector_format("csv"), VectorFormat::csv);
  EXPECT_THROW(parse_vector_format("parquet"), std::invalid_argument);
  EXPECT_EQ(guess_vector_format("a/b.csv"), VectorFormat::csv);
  EXPECT_EQ(guess_vector_format("a/b.bin"), VectorFormat::binary);
}

TEST(LabelIo, ParseAndRoundTrip)
{
  TempDir dir("labels");
  write_text(dir / "l.txt", "0\n0\n1\n");
  EXPECT_EQ(load_labels(dir / "l.txt"), (LabelVector{ 0, 0, 1 }));
  save_labels({ 5, 5, 2 }, dir / "m.txt");
  EXPECT_EQ(read_bytes(dir / "m.txt"), "5\n5\n2\n");
  EXPECT_EQ(load_labels(dir / "m.txt"), (LabelVector{ 5, 5, 2 }));
}

TEST(LabelIo, Errors)
{
  EXPECT_THROW(parse_labels("abc\n"), IoError);
  EXPECT_THROW(parse_labels("1\n2.5\n"), IoError);
  EXPECT_THROW(parse_labels("-1\n"), IoError);
  EXPECT_THROW(parse_labels(""), IoError);
  EXPECT_THROW(parse_labels("1\n\n2\n"), IoError);
  TempDir dir("labels");
  EXPECT_THROW(load_labels(dir / "missing.txt"), IoError);
}

TEST(Standardize, PopulationConvention)
{
  const auto [z, stats] = standardize(Dataset(rows({ { 1.0 }, { 3.0 } })));
  EXPECT_DOUBLE_EQ(z.values()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.values()(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(stats.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(stats.scale(0), 1.0);
}

TEST(Standardize, ConstantColumnIsCenteredOnly)
{
  const auto [z, stats] = standardize(Dataset(rows({ { 5, 1 }, { 5, 2 }, { 5, 3 } })));
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(z.values()(i, 0), 0.0);
  }
  EXPECT_EQ(stats.scale(0), 1.0);
}

TEST(Standardize, MomentsAndIdempotence)
{
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(500, 6);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = 10.0 * static_cast<double>(j) + (1.0 + static_cast<double>(j)) * normal(rng);
    }
  }
  const auto [z, stats] = standardize(Dataset(m));
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = z.values().col(j).mean();
    const double var = (z.values().col(j).array() - mean).square().sum() / n;
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(var) - 1.0), 1e-9);
  }
  const auto [z2, stats2] = standardize(z);
  EXPECT_LT((z2.values() - z.values()).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix back = (z.values().array().rowwise() * stats.scale.transpose().array()).rowwise() +
                      stats.mean.transpose().array();
  EXPECT_LT((back - m).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Standardize, NeedsTwoPoints)
{
  EXPECT_THROW(standardize(Dataset(rows({ { 1, 2 } }))), std::invalid_argument);
}

TEST(Synthetic, SingleComponent)
{
  const auto [x, labels, truth] = gen_synthetic({ .k = 1, .d = 2, .n = 100, .separation = 1, .sigma = 1, .seed = 7 });
  EXPECT_EQ(x.size(), 100u);
  EXPECT_EQ(x.dim(), 2u);
  EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](Label l) { return l == 0; }));
  EXPECT_EQ(truth.components(), 1u);
}

TEST(Synthetic, TightClustersAreFarApart)
{
  const auto [x, labels, truth] =
    gen_synthetic({ .k = 2, .d = 2, .n = 10, .separation = 100, .sigma = 0.1, .seed = 3 });
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (labels[i] != labels[j]) {
        EXPECT_GT((x.row(i) - x.row(j)).norm(), 50.0);
      }
    }
  }
}

TEST(Synthetic, DeterministicAndBalanced)
{
  const SyntheticSpec spec{ .k = 7, .d = 3, .n = 101, .separation = 10, .sigma = 1, .seed = 42 };
  const auto [x1, l1, t1] = gen_synthetic(spec);
  const auto [x2, l2, t2] = gen_synthetic(spec);
  EXPECT_EQ(x1, x2);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(t1, t2);
  std::vector<std::size_t> counts(7, 0);
  for (Label l : l1) {
    ASSERT_GE(l, 0);
    ASSERT_LT(l, 7);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < 7; ++c) {
    EXPECT_EQ(counts[c], c < 101 % 7 ? 15u : 14u);
  }
  TempDir dir("syn");
  save_vectors(x1, dir / "a.bin");
  save_vectors(x2, dir / "b.bin");
  EXPECT_EQ(read_bytes(dir / "a.bin"), read_bytes(dir / "b.bin"));

  SyntheticSpec other = spec;
  other.seed = 43;
  EXPECT_FALSE(std::get<0>(gen_synthetic(other)) == x1);
}

TEST(Synthetic, CentersAreSeparated)
{
  for (const auto& [k, d] : { std::pair{ 8, 512 }, std::pair{ 9, 2 }, std::pair{ 64, 3 } }) {
    const Matrix c = synthetic_centers(static_cast<std::size_t>(k), static_cast<std::size_t>(d), 10.0);
    for (Eigen::Index a = 0; a < c.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < c.rows(); ++b) {
        EXPECT_GE((c.row(a) - c.row(b)).norm(), 10.0 - 1e-12);
      }
    }
  }
}

TEST(Synthetic, InvalidSpec)
{
  EXPECT_THROW(gen_synthetic({ .k = 3, .d = 2, .n = 2 }), std::invalid_argument);
  EXPECT_THROW(gen_synthetic({ .k = 1, .d = 2, .n = 5, .separation = 0 }), std::invalid_argument);
  EXPECT_THROW(gen_synthetic({ .k = 1, .d = 2, .n = 5, .sigma = -1 }), std::invalid_argument);
}
