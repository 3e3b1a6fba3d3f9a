// Placeholder; the scenario-runner CLI lands with the config module.
int main() { return 2; }
