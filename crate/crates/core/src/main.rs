fn main() {
    // Die quietly when stdout is closed early (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(uarch_dse::cli::run());
}
