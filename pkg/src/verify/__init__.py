# Oracles, manufactured solutions and benches
