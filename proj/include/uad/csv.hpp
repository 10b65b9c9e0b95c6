#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace uad::csv {

// Shortest decimal form that round-trips a double exactly (17 significant digits).
std::string fmt_g17(double value);

struct Table {
    Eigen::MatrixXd values;  // one row per record
    std::vector<std::string> header;  // empty when the file had none
};

// Comma-separated numeric table. A leading line whose first field does not
// parse as a number is treated as a header. Errors name the offending row.
Table read_table(const std::filesystem::path& path);

void write_table(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                 const std::vector<std::string>& header = {});

// Writes to "<path>.tmp" and renames on commit, so failed runs leave no
// partial output behind.
class AtomicWriter {
public:
    explicit AtomicWriter(std::filesystem::path path);
    ~AtomicWriter();
    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;

    std::ofstream& stream() { return stream_; }
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_path_;
    std::ofstream stream_;
    bool committed_ = false;
};

}  // namespace uad::csv
