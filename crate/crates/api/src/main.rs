use clap::Parser;

use alp_api::cli::{run, Cli, Io};

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ALP_LOG", "warn")).init();
    let cli = Cli::parse();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = run(cli, &mut Io { out: &mut out, err: &mut err });
    std::process::ExitCode::from(code as u8)
}
