#include "cryocurate/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli_internal.hpp"
#include "cryocurate/archive.hpp"
#include "cryocurate/dataset.hpp"
#include "cryocurate/fetcher.hpp"
#include "cryocurate/formats.hpp"
#include "cryocurate/mrc.hpp"
#include "cryocurate/npy.hpp"
#include "cryocurate/star.hpp"
#include "../util/files.hpp"

namespace cryocurate::cli {
namespace fs = std::filesystem;

namespace {

struct Context {
  const CliConfig& config;
  const Environment& env;
  std::ostream& out;
  std::ostream& err;

  std::shared_ptr<net::Transport> transport() const {
    return net::make_transport({config.connect_timeout, config.read_timeout});
  }

  void warn(const std::string& message) const { err << "warning: " << message << "\n"; }
};

// ---------------------------------------------------------------- fetch ---

struct StructureArgs {
  std::string id;
  std::string filetype = "any";
  std::string main_db = "pdb";
  std::string save_directory;
};

fetcher::Fetcher make_fetcher(const Context& ctx, const StructureArgs& a) {
  fetcher::Fetcher::Options o;
  o.default_db = fetcher::parse_database(a.main_db);
  o.endpoints = {ctx.config.pdb_url, ctx.config.alphafold_url, ctx.config.uniprot_url};
  o.save_directory = a.save_directory.empty() ? ctx.config.cache_dir : expand_home(a.save_directory, ctx.env);
  o.transport = ctx.transport();
  return fetcher::Fetcher(std::move(o));
}

int cmd_fetch(const Context& ctx, const StructureArgs& a) {
  auto f = make_fetcher(ctx, a);
  const auto r = f.get_file(a.id, fetcher::parse_filetype(a.filetype), true);
  ctx.out << (f.directory() / *r.filename).string() << "\n";
  if (ctx.config.verbosity > 0)
    ctx.err << a.id << ": " << r.filedata.size() << " bytes from " << fetcher::to_string(r.source_db) << ", "
            << f.search_history().to_string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- clean ---

struct CleanArgs {
  StructureArgs structure;
  bool signal_peptides = false, hydrogens = false, water = false, hetatoms = false;
  std::string output;
};

int cmd_clean(const Context& ctx, const CleanArgs& a) {
  auto f = make_fetcher(ctx, a.structure);
  fetcher::RemoveOptions o;
  o.signal_peptides = a.signal_peptides;
  o.hydrogens = a.hydrogens;
  o.water = a.water;
  o.hetatoms = a.hetatoms;
  if (!a.output.empty()) o.output_filename = a.output;
  const auto r = f.remove(a.structure.id, o);
  for (const auto& note : r.notes) ctx.warn(note);
  ctx.out << r.output.string() << "\n";
  if (ctx.config.verbosity > 0) ctx.err << "atoms: " << r.atoms_before << " -> " << r.atoms_after << "\n";
  return kOk;
}

// --------------------------------------------------- search and download ---

archive::Archive make_archive(const Context& ctx) {
  archive::ArchiveConfig c;
  c.base_url = ctx.config.archive_url;
  c.transport = ctx.transport();
  return archive::Archive(std::move(c));
}

struct SearchArgs {
  int entry = 0;
  std::string dir;
  std::string select = "*";
  bool regex = false;
  bool verbose = false;
  std::string save_search;
};

int cmd_search(const Context& ctx, const SearchArgs& a) {
  const auto archive = make_archive(ctx);
  const auto result = archive.search(a.entry, a.dir, a.select, a.regex);
  if (a.verbose) {
    ctx.out << archive::format_verbose(result);
  } else {
    for (const auto& url : result.matched_paths) ctx.out << url << "\n";
  }
  if (!a.save_search.empty()) {
    const auto path = expand_home(a.save_search, ctx.env);
    const auto n = archive::save_search(result, path);
    ctx.err << "saved " << n << " path" << (n == 1 ? "" : "s") << " to " << path.string() << "\n";
  }
  if (result.matched_paths.empty()) {
    ctx.err << "no entries in " << archive.directory_url(a.entry, a.dir) << " match '" << a.select << "'\n";
    return kEmpty;
  }
  return kOk;
}

struct DownloadArgs {
  std::string list;
  std::string save_dir = ".";
  bool verbose = false;
};

int cmd_download(const Context& ctx, const DownloadArgs& a) {
  const auto list = expand_home(a.list, ctx.env);
  std::error_code ec;
  if (!fs::is_regular_file(list, ec)) {
    ctx.err << "error: URL list " << list.string() << " does not exist\n";
    return kNoInput;
  }
  const auto urls = archive::read_url_list(list);
  const auto save_dir = expand_home(a.save_dir, ctx.env);

  // Lines are printed in list order as soon as every earlier item is done.
  std::mutex m;
  std::vector<std::optional<archive::DownloadItem>> done(urls.size());
  std::size_t printed = 0;
  auto print = [&](const archive::DownloadItem& item) {
    const std::string counter = "[" + std::to_string(item.index + 1) + "/" + std::to_string(urls.size()) + "] ";
    if (item.ok && a.verbose)
      ctx.out << counter << "ok " << item.url << " -> " << item.path.string() << " (" << item.bytes << " bytes)\n";
    else if (!item.ok)
      ctx.out << counter << "FAILED " << item.url << ": " << item.error << "\n";
  };
  const auto report = make_archive(ctx).download(urls, save_dir, [&](const archive::DownloadItem& item) {
    std::lock_guard lock(m);
    done[item.index] = item;
    while (printed < done.size() && done[printed]) print(*done[printed++]);
  });
  ctx.out << "downloaded " << report.succeeded() << " of " << report.items.size() << " files into "
          << save_dir.string() << "\n";
  return report.all_ok() ? kOk : kFailure;
}

// -------------------------------------------------------------- dataset ---

struct DatasetArgs {
  std::string datapath;
  std::string datatype = "mrc";
  std::vector<std::string> classes;
  std::optional<std::size_t> dataset_size;
  std::string transforms;
  std::optional<double> split;
  std::uint64_t seed = 0;
  bool global_split = false;
  bool strict = false;
  std::size_t batch_size = 32;
  std::string out;
};

void print_counts(const Context& ctx, const dataset::DatasetManifest& m, const char* indent) {
  const auto counts = m.class_counts();
  for (std::size_t c = 0; c < m.classes.size(); ++c) ctx.out << indent << m.classes[c] << "  " << counts[c] << "\n";
}

int cmd_dataset(const Context& ctx, const DatasetArgs& a, bool do_export) {
  dataset::DiscoverOptions o;
  o.classes = a.classes;
  o.dataset_size = a.dataset_size;
  o.strict = a.strict;
  const auto transforms = dataset::TransformSpec::parse(a.transforms);
  const auto m = dataset::discover(expand_home(a.datapath, ctx.env), a.datatype, o);
  for (const auto& w : m.warnings) ctx.warn(w);

  ctx.out << "datapath: " << m.datapath.string() << "\n";
  ctx.out << "datatype: " << m.datatype << "\n";
  ctx.out << "records: " << m.records.size() << "\n";
  ctx.out << "classes (" << (a.classes.empty() ? "inferred" : "given") << "): " << m.classes.size() << "\n";
  print_counts(ctx, m, "  ");
  if (!transforms.empty()) ctx.out << "transforms: " << transforms.to_string() << "\n";

  std::optional<dataset::Split> split;
  if (a.split) {
    split = dataset::split(m, {*a.split, a.seed, !a.global_split});
    ctx.out << "split: " << split->train.size() << " train, " << split->validation.size() << " validation (fraction "
            << *a.split << ", seed " << a.seed << ", " << (a.global_split ? "global" : "stratified") << ")\n";
    ctx.out << "train:\n";
    print_counts(ctx, split->train, "  ");
    ctx.out << "validation:\n";
    print_counts(ctx, split->validation, "  ");
  }
  if (!do_export) return kOk;

  const auto out = expand_home(a.out, ctx.env);
  auto write = [&](const dataset::DatasetManifest& part, const fs::path& dir) {
    if (part.records.empty()) {
      ctx.warn("nothing to export into " + dir.string());
      return;
    }
    const dataset::Dataset d(part, transforms);
    const auto index = dataset::export_dataset(d, dir, a.batch_size);
    ctx.out << "exported " << index.record_count << " records in " << index.batches.size() << " batch"
            << (index.batches.size() == 1 ? "" : "es") << " to " << dir.string() << "\n";
  };
  if (split) {
    write(split->train, out / "train");
    write(split->validation, out / "validation");
  } else {
    write(m, out);
  }
  return kOk;
}

// ----------------------------------------------------------------- info ---

std::string join(const auto& values, const char* sep) {
  std::ostringstream s;
  bool first = true;
  for (const auto& v : values) {
    s << (first ? "" : sep) << v;
    first = false;
  }
  return s.str();
}

int cmd_info(const Context& ctx, const std::string& path_text) {
  const auto path = expand_home(path_text, ctx.env);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    ctx.err << "error: " << path.string() << " does not exist\n";
    return kNoInput;
  }
  const std::string text = util::read_file(path);
  const std::span<const std::byte> bytes(reinterpret_cast<const std::byte*>(text.data()), text.size());
  const auto format = detect_format(bytes, path.filename().string());
  const std::string ext = util::lower(path.extension().string());
  if (format == FileFormat::Opaque && (ext == ".mrc" || ext == ".mrcs" || ext == ".map" || ext == ".npy"))
    raise(ErrorCode::DecodeError, path.string() + " has a " + ext + " extension but is not a valid " +
                                      (ext == ".npy" ? "NPY" : "MRC") + " file");
  auto& out = ctx.out;
  out << "file: " << path.string() << "\n";
  out << "format: " << to_string(format) << "\n";
  out << "size: " << text.size() << " bytes\n";
  switch (format) {
    case FileFormat::Mrc: {
      const auto h = mrc::read_header(bytes);
      out << "nx: " << h.nx << "\nny: " << h.ny << "\nnz: " << h.nz << "\n";
      out << "mode: " << h.mode;
      if (mrc::is_supported_mode(h.mode)) out << " (" << to_string(mrc::dtype_for_mode(static_cast<mrc::Mode>(h.mode))) << ")";
      out << "\n";
      out << "sampling: " << h.mx << " " << h.my << " " << h.mz << "\n";
      out << "cell: " << join(h.cella, " ") << "\n";
      if (const auto v = h.voxel_size()) out << "voxel size: " << join(*v, " ") << "\n";
      out << "origin: " << join(h.origin, " ") << "\n";
      out << "axes: " << h.mapc << " " << h.mapr << " " << h.maps << "\n";
      out << "dmin: " << h.dmin << "\ndmax: " << h.dmax << "\ndmean: " << h.dmean << "\nrms: " << h.rms << "\n";
      out << "space group: " << h.ispg << "\n";
      out << "extended header: " << h.nsymbt << " bytes";
      if (!h.exttyp().empty()) out << " (" << h.exttyp() << ")";
      out << "\n";
      out << "version: " << h.nversion() << "\n";
      out << "byte order: " << (h.big_endian() ? "big-endian" : "little-endian") << "\n";
      out << "labels: " << h.nlabl << "\n";
      for (std::int32_t i = 0; i < h.nlabl && i < static_cast<std::int32_t>(mrc::kLabelCount); ++i)
        out << "  " << h.labels[static_cast<std::size_t>(i)] << "\n";
      break;
    }
    case FileFormat::Npy: {
      const auto a = npy::read_npy(bytes);
      out << "shape: " << shape_to_string(a.shape()) << "\n";
      out << "dtype: " << to_string(a.dtype()) << " (" << npy::descriptor(a.dtype()) << ")\n";
      out << "elements: " << a.element_count() << "\n";
      break;
    }
    case FileFormat::Star: {
      const auto t = star::read_star(text);
      out << "blocks: " << t.blocks.size() << "\n";
      for (const auto& b : t.blocks) {
        out << "data_" << b.name << ": " << b.pairs.size() << " pair" << (b.pairs.size() == 1 ? "" : "s") << ", "
            << b.loops.size() << " loop" << (b.loops.size() == 1 ? "" : "s") << "\n";
        for (std::size_t k = 0; k < b.loops.size(); ++k)
          out << "  loop " << k << ": " << b.loops[k].rows.size() << " rows, columns "
              << join(b.loops[k].columns, " ") << "\n";
      }
      break;
    }
    case FileFormat::Opaque:
      break;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
  CLI::App app{"Fetch protein structures, search and read cryoEM archives, and build labeled image datasets.",
               "cryocurate"};
  app.set_version_flag("--version", "cryocurate 0.1.0");
  app.require_subcommand(0, 1);

  ConfigOverrides flags;
  std::optional<std::string> config_file;
  bool show_config = false;
  app.add_option("--config", config_file, "INI configuration file");
  app.add_option("--archive-url", flags.archive_url, "Archive base URL");
  app.add_option("--pdb-url", flags.pdb_url, "PDB download URL");
  app.add_option("--alphafold-url", flags.alphafold_url, "AlphaFold download URL");
  app.add_option("--uniprot-url", flags.uniprot_url, "UniProt REST URL");
  app.add_option("--cache-dir", flags.cache_dir, "Structure cache directory");
  app.add_option("--verbosity", flags.verbosity, "Extra diagnostics on stderr when positive");
  app.add_option("--connect-timeout", flags.connect_timeout, "Connect timeout in seconds");
  app.add_option("--read-timeout", flags.read_timeout, "Read timeout in seconds");
  app.add_flag("--show-config", show_config, "Print the effective configuration and exit");

  auto structure_options = [](CLI::App* sub, StructureArgs& s) {
    sub->add_option("id", s.id, "PDB ID or UniProt accession")->required();
    sub->add_option("--main_db,--main-db", s.main_db, "Database to try first")
        ->check(CLI::IsMember({"pdb", "alphafold"}, CLI::ignore_case));
    sub->add_option("--save_directory,--save-directory", s.save_directory, "Cache and output directory");
  };

  StructureArgs fetch;
  auto* fetch_cmd = app.add_subcommand("fetch", "Download a structure from the PDB or AlphaFold");
  structure_options(fetch_cmd, fetch);
  fetch_cmd->add_option("--filetype", fetch.filetype, "cif, pdb or any")
      ->check(CLI::IsMember({"cif", "pdb", "any"}, CLI::ignore_case));

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Remove parts of a fetched structure");
  structure_options(clean_cmd, clean.structure);
  clean_cmd->add_flag("--signal-peptides,--signal_peptides", clean.signal_peptides, "Remove UniProt signal peptides");
  clean_cmd->add_flag("--hydrogens", clean.hydrogens, "Remove hydrogen and deuterium atoms");
  clean_cmd->add_flag("--water", clean.water, "Remove waters");
  clean_cmd->add_flag("--hetatoms", clean.hetatoms, "Remove HETATM records");
  clean_cmd->add_option("--output", clean.output, "Output filename");

  SearchArgs search;
  auto* search_cmd = app.add_subcommand("search", "List matching paths in an archive entry");
  search_cmd->add_option("--entry", search.entry, "Entry number")->required()->check(CLI::PositiveNumber);
  search_cmd->add_option("--dir", search.dir, "Directory inside the entry");
  search_cmd->add_option("--select", search.select, "Glob pattern, or a regex with --regex");
  search_cmd->add_flag("--regex", search.regex, "Treat --select as a regular expression");
  search_cmd->add_flag("--verbose", search.verbose, "Print matches and subdirectories in blocks");
  search_cmd->add_option("--save_search,--save-search", search.save_search, "Write matching URLs to this file");

  DownloadArgs download;
  auto* download_cmd = app.add_subcommand("download", "Download every URL in a list");
  download_cmd->add_option("--download", download.list, "File with one URL per line")->required();
  download_cmd->add_option("--save_dir,--save-dir", download.save_dir, "Destination directory");
  download_cmd->add_flag("--verbose", download.verbose, "Report every file");

  DatasetArgs ds;
  auto* dataset_cmd = app.add_subcommand("dataset", "Build or export a labeled image dataset");
  dataset_cmd->require_subcommand(1);
  auto dataset_options = [&](CLI::App* sub) {
    sub->add_option("--datapath", ds.datapath, "Directory of <class>_<suffix>.<ext> files")->required();
    sub->add_option("--datatype", ds.datatype, "File extension (mrc or npy)");
    sub->add_option("--classes", ds.classes, "Comma-separated classes to keep")->delimiter(',');
    sub->add_option("--dataset-size,--dataset_size", ds.dataset_size, "Maximum number of records");
    sub->add_option("--transforms", ds.transforms, "e.g. gaussian_blur(1,5),rescale(64x64),standardize");
    sub->add_option("--split", ds.split, "Training fraction in (0, 1)");
    sub->add_option("--seed", ds.seed, "Split seed");
    sub->add_flag("--global-split", ds.global_split, "Shuffle all records together instead of per class");
    sub->add_flag("--strict", ds.strict, "Fail on files without a class prefix");
  };
  auto* build_cmd = dataset_cmd->add_subcommand("build", "Print the manifest summary");
  dataset_options(build_cmd);
  auto* export_cmd = dataset_cmd->add_subcommand("export", "Write batches, labels and an index");
  dataset_options(export_cmd);
  export_cmd->add_option("--batch-size,--batch_size", ds.batch_size, "Items per batch")->check(CLI::PositiveNumber);
  export_cmd->add_option("--out", ds.out, "Output directory")->required();

  std::string info_path;
  auto* info_cmd = app.add_subcommand("info", "Describe a local MRC, NPY or STAR file");
  info_cmd->add_option("path", info_path, "File to describe")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    const auto config = resolve_config(flags, env, config_file ? std::optional<fs::path>(expand_home(*config_file, env))
                                                               : std::nullopt);
    const Context ctx{config, env, out, err};
    if (show_config) {
      out << config.describe();
      return kOk;
    }
    if (fetch_cmd->parsed()) return cmd_fetch(ctx, fetch);
    if (clean_cmd->parsed()) return cmd_clean(ctx, clean);
    if (search_cmd->parsed()) return cmd_search(ctx, search);
    if (download_cmd->parsed()) return cmd_download(ctx, download);
    if (build_cmd->parsed()) return cmd_dataset(ctx, ds, false);
    if (export_cmd->parsed()) return cmd_dataset(ctx, ds, true);
    if (info_cmd->parsed()) return cmd_info(ctx, info_path);
    err << app.help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace cryocurate::cli
