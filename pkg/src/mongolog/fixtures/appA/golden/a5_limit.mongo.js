db.inventory.aggregate([
    { $limit: 1 }
])
