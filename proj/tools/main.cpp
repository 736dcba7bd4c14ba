// Command line front end; subcommands land here as the library fills in.
int main() { return 0; }
