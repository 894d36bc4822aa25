# Run and verification orchestration
